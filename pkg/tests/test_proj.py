import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import simplex_projection_enumerated, simplex_projection_grid, sparse_projection_exhaustive
from shakedeblur.core import l20_count, magnitude_map
from shakedeblur.proj import budget_count, project_simplex, project_sparse

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def field_with_magnitudes(mags):
    f = np.zeros((2, 1, len(mags)))
    f[0, 0] = mags
    return f


def test_inactive_budget_returns_input(rng):
    f = rng.normal(size=(2, 4, 4))
    np.testing.assert_array_equal(project_sparse(f, 16), f)
    np.testing.assert_array_equal(project_sparse(f, 1e6), f)


def test_top_two_of_three():
    out = project_sparse(field_with_magnitudes([3.0, 1.0, 2.0]), 2)
    np.testing.assert_array_equal(out[0, 0], [3.0, 0.0, 2.0])


def test_fractional_budget_rounds_up():
    f = field_with_magnitudes([5, 4, 3, 2, 1.0])
    assert l20_count(project_sparse(f, 2.01)) == 3
    # 100 * 1.1 is 110.00000000000001 in binary; it must still mean 110
    assert budget_count(100 * 1.1, 10**6) == 110
    with pytest.raises(ValueError):
        project_sparse(f, 0.5)


def test_ties_go_to_lower_row_major_index():
    f = np.zeros((2, 2, 3))
    f[0] = [[1.0, 2.0, 1.0], [2.0, 1.0, 0.5]]
    out = project_sparse(f, 3)
    kept = (magnitude_map(out) > 0).astype(int)
    np.testing.assert_array_equal(kept, [[1, 1, 0], [1, 0, 0]])


def test_l20_after_projection_is_budget(rng):
    f = rng.normal(size=(2, 6, 6))
    assert l20_count(project_sparse(f, 7)) == 7


def test_survivors_bit_exact_and_idempotent(rng):
    f = rng.normal(size=(2, 7, 5))
    p = project_sparse(f, 9)
    mask = magnitude_map(p) > 0
    np.testing.assert_array_equal(p[:, mask], f[:, mask])
    np.testing.assert_array_equal(project_sparse(p, 9), p)


def test_sparse_matches_exhaustive_oracle_3x3():
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = rng.normal(size=(2, 3, 3))
        for tau in range(1, 10):
            best, best_d = sparse_projection_exhaustive(f, tau)
            out = project_sparse(f, tau)
            np.testing.assert_array_equal(out, best)
            assert float(np.sum((out - f) ** 2)) == pytest.approx(best_d, abs=1e-12)


def test_simplex_members_fixed():
    np.testing.assert_allclose(project_simplex([0.5, 0.5]), [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize(
    "v,expect",
    [([2.0, 0.0], [1.0, 0.0]), ([0.3, 0.3, 0.3], [1 / 3, 1 / 3, 1 / 3])],
)
def test_simplex_examples_against_grid(v, expect):
    out = project_simplex(v)
    np.testing.assert_allclose(out, expect, atol=1e-12)
    np.testing.assert_allclose(out, simplex_projection_grid(v), atol=2.5e-3)


def test_simplex_matches_enumeration(rng):
    for n in range(1, 5):
        for _ in range(50):
            v = rng.normal(scale=2.0, size=n)
            np.testing.assert_allclose(project_simplex(v), simplex_projection_enumerated(v), atol=1e-9)


def test_simplex_keeps_shape(rng):
    k = project_simplex(rng.normal(size=(5, 5)))
    assert k.shape == (5, 5)
    assert k.min() >= 0 and abs(k.sum() - 1) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=finite))
def test_simplex_feasible_and_idempotent(v):
    p = project_simplex(v)
    assert p.min() >= 0
    assert abs(p.sum() - 1) <= 1e-12
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite))))
def test_simplex_nonexpansive(pair):
    u, v = pair
    assert np.linalg.norm(project_simplex(u) - project_simplex(v)) <= np.linalg.norm(u - v) + 1e-12


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (2, 4, 4), elements=finite), st.floats(1, 20))
def test_sparse_budget_respected_and_support_only(f, tau):
    p = project_sparse(f, tau)
    assert l20_count(p) <= int(np.ceil(tau))
    changed = p != f
    assert np.all(p[changed] == 0)
    np.testing.assert_array_equal(project_sparse(p, tau), p)
