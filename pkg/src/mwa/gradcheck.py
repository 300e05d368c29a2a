"""Gradient verification by central finite differences.

For every scalar entry of every parameter the analytic gradient (from the
tape) is compared against (f(x+eps) - f(x-eps)) / (2*eps). The reported
figure is max |a - n| / max(|a|, |n|, 1e-8) over all entries.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DeterminismError
from .matrix import Parameter, zero_grads
from .tape import Node, Tape

REL_ERR_FLOOR = 1e-8


def finite_diff_report(
    loss_fn,
    params: list[Parameter],
    epsilon: float = 1e-5,
    _corrupt_analytic: str | None = None,
) -> dict[str, float]:
    """Per-parameter max relative error between analytic and numeric gradients.

    ``loss_fn(tape) -> Node`` must build the forward pass on the given tape
    and return a 1x1 loss node, deterministically.

    ``_corrupt_analytic`` is a negative-control hook: the named parameter's
    analytic gradient is deliberately perturbed so the check must fail.
    """
    if not 0.0 < epsilon <= 1e-3:
        raise ConfigError(f"epsilon must be in (0, 1e-3], got {epsilon}")

    def value() -> float:
        t = Tape(record=False)
        node = loss_fn(t)
        if not isinstance(node, Node) or node.val.shape != (1, 1):
            raise ConfigError("loss_fn must return a 1x1 tape node")
        return float(node.val[0, 0])

    base = value()
    if value() != base:
        raise DeterminismError("loss_fn returned different values on repeated evaluation")

    zero_grads(params)
    tape = Tape()
    tape.backward(loss_fn(tape))
    analytic = [p.grad.data.copy() for p in params]
    if _corrupt_analytic is not None:
        hit = False
        for p, a in zip(params, analytic):
            if p.name == _corrupt_analytic:
                a += 0.5
                hit = True
        if not hit:
            raise ConfigError(f"no parameter named {_corrupt_analytic!r} to corrupt")

    report: dict[str, float] = {}
    for p, a in zip(params, analytic):
        worst = 0.0
        arr = p.value.data
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + epsilon
            f_plus = value()
            arr[idx] = orig - epsilon
            f_minus = value()
            arr[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            rel = abs(a[idx] - numeric) / max(abs(a[idx]), abs(numeric), REL_ERR_FLOOR)
            worst = max(worst, rel)
        report[p.name or f"param{params.index(p)}"] = worst
    return report


def finite_diff_check(loss_fn, params: list[Parameter], epsilon: float = 1e-5) -> float:
    """Max relative error over all parameters; see :func:`finite_diff_report`."""
    report = finite_diff_report(loss_fn, params, epsilon)
    return max(report.values())
