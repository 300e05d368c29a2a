"""Dense 64-bit matrices with a fixed, reproducible summation order.

Every matrix product in the package runs through :func:`matmul`, which
accumulates strictly left-to-right over the shared dimension. That makes
results bit-for-bit identical to a naive triple-loop evaluation, so oracle
tests can compare exactly instead of within a tolerance.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def _as_array(data) -> np.ndarray:
    a = np.array(data, dtype=np.float64, order="C")
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {a.shape}")
    return a


class Matrix:
    """Row-major float64 matrix with positive dimensions and finite entries."""

    __slots__ = ("data",)

    def __init__(self, data):
        a = _as_array(data)
        if not np.isfinite(a).all():
            raise ValueError("matrix entries must be finite")
        self.data = a

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "Matrix":
        # Internal fast path: `a` is already a validated float64 2-D array.
        m = object.__new__(cls)
        m.data = a
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        if rows < 1 or cols < 1:
            raise ShapeError(f"matrix dimensions must be positive, got ({rows}, {cols})")
        return cls._wrap(np.zeros((rows, cols)))

    @classmethod
    def eye(cls, n: int) -> "Matrix":
        if n < 1:
            raise ShapeError(f"matrix dimensions must be positive, got ({n}, {n})")
        return cls._wrap(np.eye(n))

    @classmethod
    def from_rows(cls, rows) -> "Matrix":
        return cls(rows)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def copy(self) -> "Matrix":
        return Matrix._wrap(self.data.copy())

    def tolist(self) -> list[list[float]]:
        return self.data.tolist()

    def __repr__(self) -> str:
        return f"Matrix({self.rows}x{self.cols})"


class Parameter:
    """A trainable matrix paired with a same-shape gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, value: Matrix, name: str = ""):
        self.name = name
        self.value = value
        self.grad = Matrix.zeros(value.rows, value.cols)

    def zero_grad(self) -> None:
        self.grad.data.fill(0.0)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, {self.value.rows}x{self.value.cols})"


def zero_grads(params) -> None:
    """Reset the gradient accumulator of every parameter to zero."""
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# Raw kernels. These operate on float64 ndarrays and contain the actual math;
# both the public Matrix operations and the autodiff tape call them.
# ---------------------------------------------------------------------------


def _mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a (r, s) @ b (s, c) accumulated left-to-right over s."""
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += a[:, k, None] * b[k]
    return out


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with per-row max subtraction for stability."""
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _logistic(x: np.ndarray) -> np.ndarray:
    # tanh form avoids overflow for large negative inputs.
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _mixed_pool(block: np.ndarray, lam: float) -> np.ndarray:
    """block (l, n) -> (1, n): lam * columnwise max + (1 - lam) * columnwise mean."""
    mx = block.max(axis=0, keepdims=True)
    mn = block.mean(axis=0, keepdims=True)
    return lam * mx + (1.0 - lam) * mn


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with the fixed left-to-right accumulation order."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return Matrix._wrap(_mm(a.data, b.data))


def softmax_rows(m: Matrix) -> Matrix:
    """Row-stochastic softmax: each output row is nonnegative and sums to 1."""
    return Matrix._wrap(_softmax_rows(m.data))


def tanh_map(m: Matrix) -> Matrix:
    """Elementwise tanh."""
    return Matrix._wrap(np.tanh(m.data))


def logistic_map(m: Matrix) -> Matrix:
    """Elementwise logistic sigmoid, stable for large |x|."""
    return Matrix._wrap(_logistic(m.data))


def concat_columns(parts: list[Matrix]) -> Matrix:
    """Concatenate matrices side by side, in list order."""
    if not parts:
        raise ShapeError("concat_columns: empty part list")
    rows = parts[0].rows
    for i, p in enumerate(parts):
        if p.rows != rows:
            raise ShapeError(
                f"concat_columns: part 0 has {rows} rows but part {i} has {p.rows}"
            )
    return Matrix._wrap(np.concatenate([p.data for p in parts], axis=1))


def concat_rows(parts: list[Matrix]) -> Matrix:
    """Stack matrices top to bottom, in list order."""
    if not parts:
        raise ShapeError("concat_rows: empty part list")
    cols = parts[0].cols
    for i, p in enumerate(parts):
        if p.cols != cols:
            raise ShapeError(
                f"concat_rows: part 0 has {cols} cols but part {i} has {p.cols}"
            )
    return Matrix._wrap(np.concatenate([p.data for p in parts], axis=0))


def transpose(m: Matrix) -> Matrix:
    return Matrix._wrap(np.ascontiguousarray(m.data.T))


def add(a: Matrix, b: Matrix) -> Matrix:
    if a.shape != b.shape:
        raise ShapeError(f"add: shape mismatch {a.shape} vs {b.shape}")
    return Matrix._wrap(a.data + b.data)


def scale(m: Matrix, c: float) -> Matrix:
    return Matrix._wrap(m.data * float(c))


def uniform_init(rng: np.random.Generator, rows: int, cols: int, bound: float) -> Matrix:
    """Uniform draw on (-bound, bound), the package-wide init distribution."""
    return Matrix._wrap(rng.uniform(-bound, bound, size=(rows, cols)))
