import numpy as np
import pytest

from nemflow.fields import (
    GridSpec,
    NonFiniteError,
    VectorField,
    forward_transform,
    inverse_transform,
    l2_inner,
)
from util import band_limited


def test_grid_validation():
    GridSpec(2, 8)
    with pytest.raises(ValueError, match="even"):
        GridSpec(2, 7)
    with pytest.raises(ValueError, match="even"):
        GridSpec(2, 2)
    with pytest.raises(ValueError, match="dim"):
        GridSpec(4, 8)
    with pytest.raises(ValueError, match="padding_factor"):
        GridSpec(2, 8, "none", padding_factor=2)
    with pytest.raises(ValueError, match="insufficient"):
        GridSpec(2, 8, "exact", padding_factor=1)


def test_padded_sizes_per_mode():
    assert GridSpec(2, 8, "none").padded_n == 8
    assert GridSpec(2, 8, "two_thirds").padded_n == 12
    assert GridSpec(2, 8, "exact").padded_n == 24


def test_vector_field_validation():
    grid = GridSpec(2, 8)
    with pytest.raises(NonFiniteError):
        VectorField(grid, np.full((1, 8, 8), np.nan))
    with pytest.raises(ValueError, match="shape"):
        VectorField(grid, np.zeros((1, 8, 4)))


def test_constant_field_transforms_to_mean():
    grid = GridSpec(2, 8)
    f = VectorField(grid, np.full((1, 8, 8), 3.25))
    coeffs = forward_transform(f).coeffs
    assert coeffs[0, 0, 0] == pytest.approx(3.25, abs=1e-14)
    coeffs_rest = coeffs.copy()
    coeffs_rest[0, 0, 0] = 0.0
    assert np.max(np.abs(coeffs_rest)) < 1e-14


def test_cosine_mode_coefficients():
    grid = GridSpec(2, 8)
    x = grid.meshgrid()
    f = VectorField(grid, np.cos(2 * np.pi * x[0])[None])
    coeffs = forward_transform(f).coeffs
    assert coeffs[0, 1, 0] == pytest.approx(0.5, abs=1e-14)
    assert coeffs[0, -1, 0] == pytest.approx(0.5, abs=1e-14)
    zeroed = coeffs.copy()
    zeroed[0, 1, 0] = zeroed[0, -1, 0] = 0.0
    assert np.max(np.abs(zeroed)) < 1e-14


def test_roundtrip_matches_direct_dft_sum():
    """inverse(forward(f)) reproduces f; forward agrees with the explicit
    DFT sum evaluated without any fft code."""
    grid = GridSpec(2, 8)
    rng = np.random.default_rng(42)
    f = VectorField(grid, rng.normal(size=(2, 8, 8)))
    transformed = forward_transform(f)
    back = inverse_transform(transformed)
    assert np.max(np.abs(back.values - f.values)) < 1e-12 * np.max(np.abs(f.values))

    k = np.fft.fftfreq(8, 1 / 8).astype(int)
    x = np.arange(8) / 8.0
    for ki in (0, 3, -2):
        for kj in (1, -4):
            phase = np.exp(-2j * np.pi * (ki * x[:, None] + kj * x[None, :]))
            direct = np.sum(f.values[0] * phase) / 64
            i = list(k).index(ki)
            j = list(k).index(kj)
            assert transformed.coeffs[0, i, j] == pytest.approx(direct, abs=1e-13)


@pytest.mark.parametrize("dim,n", [(2, 8), (3, 8)])
def test_parseval(dim, n):
    grid = GridSpec(dim, n)
    f = band_limited(grid, 2, seed=5)
    spectral = float(np.sum(np.abs(forward_transform(f).coeffs) ** 2))
    real = l2_inner(f, f)
    assert real == pytest.approx(spectral, rel=1e-12)


def test_inner_product_grid_mismatch():
    f = band_limited(GridSpec(2, 8), 1, seed=0)
    g = band_limited(GridSpec(2, 16), 1, seed=0)
    with pytest.raises(ValueError):
        l2_inner(f, g)
