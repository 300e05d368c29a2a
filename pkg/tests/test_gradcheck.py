"""Finite-difference verifier: positive cases, negative control, determinism."""

import numpy as np
import pytest

from mwa import ConfigError, DeterminismError, Matrix, Parameter, finite_diff_check, finite_diff_report


def make_param(rng, r, c, name="w"):
    return Parameter(Matrix(rng.standard_normal((r, c))), name)


class TestFiniteDiff:
    def test_sum_of_squares(self):
        # loss = sum(tanh(W W^T)) would do, but the contract example is the
        # quadratic: analytic gradient 2W against central differences.
        rng = np.random.default_rng(10)
        w = make_param(rng, 3, 4)

        def loss_fn(t):
            x = t.param(w)
            return t.sum_all(t.matmul(x, t.transpose(x)))

        err = finite_diff_check(loss_fn, [w], epsilon=1e-5)
        assert err < 1e-7

    def test_constant_loss(self):
        w = make_param(np.random.default_rng(1), 2, 2)

        def loss_fn(t):
            t.param(w)
            return t.sum_all(t.constant([[7.0]]))

        assert finite_diff_check(loss_fn, [w], epsilon=1e-5) < 1e-7

    def test_random_small_ops_under_tolerance(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            w = make_param(rng, 3, 3, f"w{trial}")
            b = make_param(rng, 3, 3, f"b{trial}")

            def loss_fn(t):
                x = t.matmul(t.tanh_map(t.param(w)), t.softmax_rows(t.param(b)))
                return t.sum_all(t.logistic(x))

            assert finite_diff_check(loss_fn, [w, b], epsilon=1e-5) < 1e-5

    def test_epsilon_range_enforced(self):
        w = make_param(np.random.default_rng(3), 1, 1)

        def loss_fn(t):
            return t.sum_all(t.param(w))

        with pytest.raises(ConfigError):
            finite_diff_check(loss_fn, [w], epsilon=0.0)
        with pytest.raises(ConfigError):
            finite_diff_check(loss_fn, [w], epsilon=1e-2)

    def test_nondeterministic_loss_detected(self):
        w = make_param(np.random.default_rng(4), 1, 1)
        counter = iter(range(10**6))

        def loss_fn(t):
            return t.sum_all(t.add(t.param(w), t.constant([[float(next(counter))]])))

        with pytest.raises(DeterminismError):
            finite_diff_check(loss_fn, [w], epsilon=1e-5)

    def test_corrupt_hook_fails_the_check(self):
        rng = np.random.default_rng(5)
        w = make_param(rng, 2, 2, "w")

        def loss_fn(t):
            return t.sum_all(t.tanh_map(t.param(w)))

        clean = finite_diff_report(loss_fn, [w], epsilon=1e-5)
        assert clean["w"] < 1e-7
        dirty = finite_diff_report(loss_fn, [w], epsilon=1e-5, _corrupt_analytic="w")
        assert dirty["w"] > 1e-2

    def test_report_names_every_parameter(self):
        rng = np.random.default_rng(6)
        a = make_param(rng, 2, 2, "a")
        b = make_param(rng, 2, 2, "b")

        def loss_fn(t):
            return t.sum_all(t.add(t.tanh_map(t.param(a)), t.param(b)))

        report = finite_diff_report(loss_fn, [a, b], epsilon=1e-5)
        assert set(report) == {"a", "b"}
