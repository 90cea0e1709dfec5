import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from despeckle.grid import (
    as_field,
    divergence_flux,
    gaussian_convolve,
    gaussian_kernel,
    gradient_magnitude_sq,
    laplacian,
    laplacian_matrix,
    max_abs,
    reflect_index,
)


def laplacian_loops(f):
    h, w = f.shape
    out = np.zeros_like(f)
    for i in range(h):
        for j in range(w):
            s = 0.0
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                s += f[reflect_index(i + di, h), reflect_index(j + dj, w)]
            out[i, j] = s - 4 * f[i, j]
    return out


@pytest.mark.parametrize("i,n,expected", [(-1, 5, 0), (5, 5, 4), (2, 5, 2), (-5, 5, 4), (9, 5, 0)])
def test_reflect_index_examples(i, n, expected):
    assert reflect_index(i, n) == expected


@given(st.integers(1, 40), st.data())
def test_reflect_index_lands_in_range(n, data):
    i = data.draw(st.integers(-n, 2 * n - 1))
    r = reflect_index(i, n)
    assert 0 <= r < n
    if 0 <= i < n:
        assert r == i
    # mirroring about -1/2: -1 - i maps to the same cell as i
    assert reflect_index(-1 - r, n) == r


def test_laplacian_constant_is_zero():
    assert np.array_equal(laplacian(np.full((3, 3), 7.0)), np.zeros((3, 3)))


def test_laplacian_quadratic_interior():
    i, j = np.mgrid[0:5, 0:5].astype(float)
    out = laplacian(i ** 2 + j ** 2)
    assert np.all(out[1:-1, 1:-1] == 4.0)


def test_laplacian_impulse():
    f = np.zeros((3, 3))
    f[1, 1] = 1.0
    expected = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=float)
    assert np.array_equal(laplacian(f), expected)


def test_laplacian_matches_loop_oracle(rng):
    f = rng.normal(size=(7, 9))
    np.testing.assert_allclose(laplacian(f), laplacian_loops(f), atol=1e-12)


def test_laplacian_matrix_matches_operator(rng):
    f = rng.normal(size=(6, 5))
    np.testing.assert_allclose(laplacian_matrix(f.shape) @ f.ravel(), laplacian(f).ravel(), atol=1e-12)


def test_laplacian_conserves_mass(rng):
    f = rng.uniform(-50, 50, size=(20, 13))
    assert abs(laplacian(f).sum()) <= 1e-9 * np.abs(f).max() * f.size


@pytest.mark.parametrize("f,expected", [
    (np.full((4, 4), 3.0), 0.0),
    (2.0 * np.mgrid[0:5, 0:5][0], 4.0),
    (3.0 * np.mgrid[0:5, 0:5][1], 9.0),
])
def test_gradient_magnitude_sq(f, expected):
    assert np.all(gradient_magnitude_sq(f)[1:-1, 1:-1] == expected)


def test_divergence_flux_unit_coefficient_is_laplacian_bitwise(rng):
    for _ in range(20):
        f = rng.normal(size=(rng.integers(3, 12), rng.integers(3, 12)))
        assert np.array_equal(divergence_flux(np.ones_like(f), f), laplacian(f))


def test_divergence_flux_constant_field(rng):
    c = rng.uniform(0, 2, size=(8, 8))
    assert np.array_equal(divergence_flux(c, np.full((8, 8), 5.0)), np.zeros((8, 8)))


def test_divergence_flux_oracle(rng):
    c = rng.uniform(0, 2, size=(6, 7))
    f = rng.normal(size=(6, 7))
    h, w = f.shape
    out = np.zeros_like(f)
    for i in range(h):
        for j in range(w):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < h and 0 <= b < w:
                    out[i, j] += 0.5 * (c[i, j] + c[a, b]) * (f[a, b] - f[i, j])
    np.testing.assert_allclose(divergence_flux(c, f), out, atol=1e-12)


def test_divergence_theorem(rng):
    for _ in range(100):
        c = rng.uniform(0, 3, size=(16, 16))
        f = rng.normal(size=(16, 16))
        assert abs(divergence_flux(c, f).sum()) <= 1e-10


def test_gaussian_kernel_properties():
    for xi in (0.5, 1.0, 2.3):
        k = gaussian_kernel(xi)
        assert len(k) == 2 * int(np.ceil(3 * xi)) + 1
        assert abs(k.sum() - 1.0) <= 1e-12
        assert np.array_equal(k, k[::-1])


def test_gaussian_convolve_examples(rng):
    assert np.allclose(gaussian_convolve(np.full((9, 9), 4.2), 1.5), 4.2, atol=1e-12)
    f = rng.normal(size=(9, 9))
    assert np.array_equal(gaussian_convolve(f, 0.0), f)
    imp = np.zeros((15, 15))
    imp[7, 7] = 1.0
    assert abs(gaussian_convolve(imp, 1.0).sum() - 1.0) <= 1e-10


def test_gaussian_convolve_mass_and_bounds(rng):
    f = rng.uniform(10, 200, size=(17, 23))
    g = gaussian_convolve(f, 1.0)
    assert abs(g.sum() - f.sum()) <= 1e-9 * f.sum()
    assert g.min() >= f.min() - 1e-12 and g.max() <= f.max() + 1e-12


def test_max_abs():
    assert max_abs(np.array([[-3.0, 2.0], [1.0, 0.0]])) == 3.0
    assert max_abs(np.zeros((3, 3))) == 0.0
    assert max_abs(np.full((3, 3), 255.0)) == 255.0


def test_as_field_validation():
    with pytest.raises(ValueError):
        as_field(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        as_field(np.zeros(9))
    bad = np.zeros((4, 4))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        as_field(bad)
    assert as_field(np.ones((3, 3), dtype=np.uint8)).dtype == np.float64


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 10), st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_sum_of_laplacian_vanishes(h, w, seed):
    f = np.random.default_rng(seed).normal(size=(h, w))
    assert abs(laplacian(f).sum()) <= 1e-9 * max(np.abs(f).max(), 1.0) * f.size
