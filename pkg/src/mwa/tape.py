"""Reverse-mode differentiation on a recorded operation tape.

The model's computation graph is small and fixed, so there is no general
graph engine here: each forward operation appends one backward closure to
the tape, and :meth:`Tape.backward` replays the closures in reverse order.
Gradients flow into ``Parameter.grad`` additively, so calling backward twice
without zeroing doubles every accumulated gradient.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, TapeError
from .matrix import Matrix, Parameter, _logistic, _mixed_pool, _mm, _softmax_rows


class Node:
    """One intermediate value on the tape."""

    __slots__ = ("val", "grad")

    def __init__(self, val: np.ndarray):
        self.val = val
        self.grad = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.val.shape

    def matrix(self) -> Matrix:
        return Matrix._wrap(self.val.copy())


def _ensure_grad(n: Node) -> np.ndarray:
    if n.grad is None:
        n.grad = np.zeros_like(n.val)
    return n.grad


class Tape:
    """Records a forward pass; ``record=False`` skips closures for inference."""

    def __init__(self, record: bool = True):
        self.record = record
        self._steps = []
        self._nodes = []
        self._leaves = {}

    def _new(self, val: np.ndarray) -> Node:
        n = Node(val)
        self._nodes.append(n)
        return n

    def _push(self, fn) -> None:
        if self.record:
            self._steps.append(fn)

    # -- leaves ------------------------------------------------------------

    def constant(self, value) -> Node:
        """A node with no gradient path (plain data, fixed tables)."""
        if isinstance(value, Matrix):
            a = value.data
        elif isinstance(value, Node):
            raise TapeError("constant: value is already a tape node")
        else:
            a = np.asarray(value, dtype=np.float64)
            if a.ndim == 0:
                a = a.reshape(1, 1)
        return self._new(a)

    def param(self, p: Parameter) -> Node:
        """Leaf node for a trainable parameter; cached per tape so shared uses
        of one parameter accumulate into a single gradient buffer."""
        key = id(p)
        if key not in self._leaves:
            self._leaves[key] = (p, self._new(p.value.data))
        return self._leaves[key][1]

    # -- operations ---------------------------------------------------------

    def matmul(self, x: Node, y: Node) -> Node:
        if x.val.shape[1] != y.val.shape[0]:
            raise ShapeError(
                f"matmul: inner dimensions differ, {x.val.shape} x {y.val.shape}"
            )
        out = self._new(_mm(x.val, y.val))

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += _mm(g, y.val.T)
            _ensure_grad(y)
            y.grad += _mm(x.val.T, g)

        self._push(bwd)
        return out

    def transpose(self, x: Node) -> Node:
        out = self._new(np.ascontiguousarray(x.val.T))

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g.T

        self._push(bwd)
        return out

    def add(self, x: Node, y: Node) -> Node:
        if x.val.shape != y.val.shape:
            raise ShapeError(f"add: shape mismatch {x.val.shape} vs {y.val.shape}")
        out = self._new(x.val + y.val)

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g
            _ensure_grad(y)
            y.grad += g

        self._push(bwd)
        return out

    def scale(self, x: Node, c: float) -> Node:
        c = float(c)
        out = self._new(x.val * c)

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g * c

        self._push(bwd)
        return out

    def softmax_rows(self, x: Node) -> Node:
        y = _softmax_rows(x.val)
        out = self._new(y)

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += y * (g - (g * y).sum(axis=1, keepdims=True))

        self._push(bwd)
        return out

    def tanh_map(self, x: Node) -> Node:
        y = np.tanh(x.val)
        out = self._new(y)

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g * (1.0 - y * y)

        self._push(bwd)
        return out

    def logistic(self, x: Node) -> Node:
        y = _logistic(x.val)
        out = self._new(y)

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g * y * (1.0 - y)

        self._push(bwd)
        return out

    def concat_columns(self, xs: list[Node]) -> Node:
        if not xs:
            raise ShapeError("concat_columns: empty part list")
        rows = xs[0].val.shape[0]
        for x in xs:
            if x.val.shape[0] != rows:
                raise ShapeError("concat_columns: row counts differ")
        out = self._new(np.concatenate([x.val for x in xs], axis=1))
        offsets = np.cumsum([0] + [x.val.shape[1] for x in xs])

        def bwd():
            g = out.grad
            if g is None:
                return
            for x, j0, j1 in zip(xs, offsets[:-1], offsets[1:]):
                _ensure_grad(x)
                x.grad += g[:, j0:j1]

        self._push(bwd)
        return out

    def concat_rows(self, xs: list[Node]) -> Node:
        if not xs:
            raise ShapeError("concat_rows: empty part list")
        cols = xs[0].val.shape[1]
        for x in xs:
            if x.val.shape[1] != cols:
                raise ShapeError("concat_rows: column counts differ")
        out = self._new(np.concatenate([x.val for x in xs], axis=0))
        offsets = np.cumsum([0] + [x.val.shape[0] for x in xs])

        def bwd():
            g = out.grad
            if g is None:
                return
            for x, i0, i1 in zip(xs, offsets[:-1], offsets[1:]):
                _ensure_grad(x)
                x.grad += g[i0:i1]

        self._push(bwd)
        return out

    def slice_rows(self, x: Node, i0: int, i1: int) -> Node:
        if not (0 <= i0 < i1 <= x.val.shape[0]):
            raise ShapeError(f"slice_rows: [{i0}:{i1}] out of range for {x.val.shape}")
        out = self._new(x.val[i0:i1].copy())

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad[i0:i1] += g

        self._push(bwd)
        return out

    def slice_columns(self, x: Node, j0: int, j1: int) -> Node:
        if not (0 <= j0 < j1 <= x.val.shape[1]):
            raise ShapeError(f"slice_columns: [{j0}:{j1}] out of range for {x.val.shape}")
        out = self._new(np.ascontiguousarray(x.val[:, j0:j1]))

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad[:, j0:j1] += g

        self._push(bwd)
        return out

    def repeat_rows(self, x: Node, times: int) -> Node:
        """Stack `times` copies of a single row; gradient is the row-sum."""
        if times < 1:
            raise ShapeError(f"repeat_rows: times must be >= 1, got {times}")
        if x.val.shape[0] != 1:
            raise ShapeError(f"repeat_rows: expected a single row, got {x.val.shape}")
        out = self._new(np.repeat(x.val, times, axis=0))

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g.sum(axis=0, keepdims=True)

        self._push(bwd)
        return out

    def mixed_pool(self, block: Node, lam) -> Node:
        """Pool an (l, n) row block to (1, n): lam*max + (1-lam)*mean.

        ``lam`` may be a 1x1 Node (trainable balance) or a plain float.
        At ties the max gradient goes to the lowest row index only.
        """
        b = block.val
        if b.shape[0] < 1:
            raise ShapeError("mixed_pool: empty block")
        lam_node = lam if isinstance(lam, Node) else None
        lam_val = float(lam_node.val[0, 0]) if lam_node is not None else float(lam)
        out = self._new(_mixed_pool(b, lam_val))

        def bwd():
            g = out.grad
            if g is None:
                return
            l = b.shape[0]
            amax = b.argmax(axis=0)
            _ensure_grad(block)
            cols = np.arange(b.shape[1])
            np.add.at(block.grad, (amax, cols), lam_val * g[0])
            block.grad += (1.0 - lam_val) / l * g
            if lam_node is not None:
                mx = b.max(axis=0)
                mn = b.mean(axis=0)
                _ensure_grad(lam_node)
                lam_node.grad[0, 0] += float((g[0] * (mx - mn)).sum())

        self._push(bwd)
        return out

    def embed_rows(self, table: Node, ids: list[int]) -> Node:
        """Gather rows of an embedding table by id."""
        v = table.val.shape[0]
        for i in ids:
            if not 0 <= i < v:
                raise ShapeError(f"embed_rows: id {i} out of range [0, {v})")
        idx = list(ids)
        out = self._new(table.val[idx].copy())

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(table)
            np.add.at(table.grad, idx, g)

        self._push(bwd)
        return out

    def mean_rows(self, x: Node) -> Node:
        """Column means as a 1-row matrix."""
        n = x.val.shape[0]
        out = self._new(x.val.mean(axis=0, keepdims=True))

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g / n

        self._push(bwd)
        return out

    def sum_all(self, x: Node) -> Node:
        out = self._new(np.array([[x.val.sum()]]))

        def bwd():
            g = out.grad
            if g is None:
                return
            _ensure_grad(x)
            x.grad += g[0, 0]

        self._push(bwd)
        return out

    def cross_entropy(self, logits: Node, label: int) -> Node:
        """Softmax cross-entropy of a single 1xC logit row against a class id."""
        z = logits.val
        if z.shape[0] != 1:
            raise ShapeError(f"cross_entropy: expected 1xC logits, got {z.shape}")
        if not 0 <= label < z.shape[1]:
            raise ShapeError(f"cross_entropy: label {label} out of range")
        m = z.max()
        shifted = z - m
        lse = float(np.log(np.exp(shifted).sum()) + m)
        out = self._new(np.array([[lse - z[0, label]]]))

        def bwd():
            g = out.grad
            if g is None:
                return
            p = _softmax_rows(z)
            p[0, label] -= 1.0
            _ensure_grad(logits)
            logits.grad += g[0, 0] * p

        self._push(bwd)
        return out

    # -- backward ------------------------------------------------------------

    def backward(self, loss: Node) -> None:
        """Propagate d(loss)/d(leaf) into every reached Parameter.grad.

        Each call is a fresh pass over the recorded closures; parameter
        gradients accumulate across calls.
        """
        if not self.record:
            raise TapeError("backward on a non-recording tape")
        if not self._steps:
            raise TapeError("backward before any forward operation was recorded")
        if loss.val.shape != (1, 1):
            raise TapeError(f"backward: loss must be 1x1, got {loss.val.shape}")
        for n in self._nodes:
            n.grad = None
        loss.grad = np.ones((1, 1))
        for fn in reversed(self._steps):
            fn()
        for p, leaf in self._leaves.values():
            if leaf.grad is not None:
                p.grad.data += leaf.grad
