import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dial.oracle import (finite_diff_grad, linear_assignment, w1_brute_force, w1_exact_1d,
                         w1_exact_assignment)


def test_1d_examples():
    a = np.array([3.0, -1.0, 2.0])
    assert w1_exact_1d(a, a) == 0.0
    assert w1_exact_1d([0, 2], [1, 3]) == 1.0
    assert w1_exact_1d(a, a + 2.5) == pytest.approx(2.5, abs=1e-15)
    with pytest.raises(ValueError):
        w1_exact_1d([1, 2], [1])


def test_assignment_equals_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        d = int(rng.integers(2, 5))
        p, q = rng.standard_normal((n, d)), rng.standard_normal((n, d))
        assert w1_exact_assignment(p, q) == w1_brute_force(p, q)


def test_assignment_equals_brute_force_1d():
    # several bijections tie exactly in 1-D, so their float sums may differ in the last bit
    rng = np.random.default_rng(10)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        p, q = rng.standard_normal(n), rng.standard_normal(n)
        assert w1_exact_assignment(p, q) == pytest.approx(w1_brute_force(p, q), rel=1e-14, abs=1e-15)


def test_assignment_equals_1d_formula():
    rng = np.random.default_rng(1)
    for n in (1, 5, 40, 200):
        a, b = rng.standard_normal(n), rng.standard_normal(n) * 2 + 1
        assert w1_exact_assignment(a, b) == pytest.approx(w1_exact_1d(a, b), rel=1e-12)


def test_assignment_is_optimal_against_scipy():
    from scipy.optimize import linear_sum_assignment
    rng = np.random.default_rng(2)
    for n in (10, 60):
        c = rng.random((n, n))
        perm = linear_assignment(c)
        assert sorted(perm) == list(range(n))
        r, cc = linear_sum_assignment(c)
        assert c[np.arange(n), perm].sum() == pytest.approx(c[r, cc].sum(), rel=1e-12)


def test_assignment_cap_and_mismatch():
    with pytest.raises(ValueError, match="subsample"):
        w1_exact_assignment(np.zeros((513, 1)), np.zeros((513, 1)))
    with pytest.raises(ValueError):
        w1_exact_assignment(np.zeros((3, 2)), np.zeros((4, 2)))


def test_identical_is_zero():
    p = np.random.default_rng(3).standard_normal((30, 4))
    assert w1_exact_assignment(p, p) == 0.0


clouds = st.integers(1, 6).flatmap(lambda n: st.tuples(*[hnp.arrays(
    np.float64, (n, 2), elements=st.floats(-10, 10, allow_nan=False)) for _ in range(3)]))


@settings(max_examples=60, deadline=None)
@given(clouds)
def test_metric_axioms(triple):
    p, q, r = triple
    assert w1_exact_assignment(p, p) == 0.0
    assert w1_exact_assignment(p, q) == pytest.approx(w1_exact_assignment(q, p), abs=1e-9)
    assert w1_exact_assignment(p, r) <= w1_exact_assignment(p, q) + w1_exact_assignment(q, r) + 1e-9


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 30), elements=st.floats(-100, 100)), st.floats(-50, 50))
def test_shift_gives_abs_shift(a, c):
    assert w1_exact_1d(a, a + c) == pytest.approx(abs(c), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 25), st.integers(0, 10_000))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    p, q = rng.standard_normal((n, 3)), rng.standard_normal((n, 3))
    base = w1_exact_assignment(p, q)
    assert w1_exact_assignment(p[rng.permutation(n)], q[rng.permutation(n)]) == pytest.approx(base, rel=1e-12)


def test_finite_diff_examples():
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(finite_diff_grad(lambda x: 0.5 * x @ x, v), v, atol=1e-9)
    w = np.array([0.3, 4.0, -1.0])
    np.testing.assert_allclose(finite_diff_grad(lambda x: w @ x, v), w, atol=1e-9)
    with pytest.raises(FloatingPointError):
        finite_diff_grad(lambda x: np.inf, v)
