import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import grad_direct
from shakedeblur.core import (
    DegenerateImageError,
    as_image,
    as_kernel,
    delta_kernel,
    gradient_field,
    l1_l2_ratio,
    l20_count,
    magnitude_map,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_constant_image_has_zero_gradient():
    assert np.all(gradient_field(np.full((5, 7), 0.3)) == 0)


def test_two_pixel_row_wraps():
    a, b = 0.25, 0.75
    g = gradient_field([[a, b]])
    np.testing.assert_array_equal(g[0], [[b - a, a - b]])
    np.testing.assert_array_equal(g[1], [[0.0, 0.0]])


def test_gradient_matches_loop_and_telescopes(rng):
    img = rng.random((8, 8))
    g = gradient_field(img)
    np.testing.assert_allclose(g, grad_direct(img), rtol=0, atol=1e-15)
    assert abs(g[0].sum()) < 1e-12 and abs(g[1].sum()) < 1e-12


def test_gradient_linear(rng):
    u, v = rng.random((2, 9, 6))
    a, b = 1.7, -0.4
    np.testing.assert_allclose(
        gradient_field(a * u + b * v), a * gradient_field(u) + b * gradient_field(v), atol=1e-12
    )


def test_magnitude_basic(rng):
    assert np.all(magnitude_map(np.zeros((2, 3, 3))) == 0)
    f = np.zeros((2, 1, 1))
    f[:, 0, 0] = 3.0, 4.0
    assert magnitude_map(f)[0, 0] == 5.0
    f = rng.normal(size=(2, 6, 5))
    m = magnitude_map(f)
    assert np.all(m >= 0)
    for i in range(6):
        for j in range(5):
            assert m[i, j] ** 2 == pytest.approx(f[0, i, j] ** 2 + f[1, i, j] ** 2, rel=1e-14)


def test_magnitude_zero_iff_both_channels_zero():
    f = np.zeros((2, 2, 2))
    f[0, 0, 0] = 1e-300
    f[1, 1, 1] = -2.0
    m = magnitude_map(f)
    assert (m == 0).tolist() == [[False, True], [True, False]]


def test_l20_count():
    f = np.zeros((2, 4, 4))
    assert l20_count(f) == 0
    f[0, 1, 2] = 0.5
    f[1, 3, 3] = -1.0
    assert l20_count(f) == 2


def test_l1_l2_examples():
    m = np.zeros((3, 3))
    m[1, 1] = 7.0
    assert l1_l2_ratio(m) == 1.0
    assert l1_l2_ratio(np.full((2, 2), 0.3)) == pytest.approx(2.0, rel=1e-15)
    assert l1_l2_ratio(np.ones(49)) == pytest.approx(7.0, rel=1e-15)


def test_l1_l2_degenerate():
    with pytest.raises(DegenerateImageError, match="degenerate image"):
        l1_l2_ratio(np.zeros((4, 4)))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=finite), st.floats(1e-6, 1e6) | st.floats(-1e6, -1e-6))
def test_l1_l2_scale_invariant_and_bounded(m, alpha):
    if not np.any(m):
        return
    # subnormals lose digits under scaling; the property is about normal floats
    assume(np.all((m == 0) | (np.abs(m) >= 1e-290)))
    r = l1_l2_ratio(m)
    assert l1_l2_ratio(alpha * m) == pytest.approx(r, rel=1e-12)
    nnz = np.count_nonzero(m)
    assert 1 - 1e-12 <= r <= np.sqrt(nnz) * (1 + 1e-12)


def test_validators():
    with pytest.raises(ValueError):
        as_image(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        as_image(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        as_kernel(np.ones((4, 4)) / 16)
    with pytest.raises(ValueError):
        as_kernel(np.ones((3, 3)), check_simplex=True)
    assert as_kernel(delta_kernel(5), check_simplex=True)[2, 2] == 1.0
