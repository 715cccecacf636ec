"""The two nonlinear operators coupling director and flow.

extra_velocity is the elastic contribution
    v_i = sum_j mu_j d_i d_j/dx_i ... spelled out:
    v = mu . grad d + alpha div{mu (x) d} - (1 - alpha) div{d (x) mu}
with (mu . grad d)_i = sum_j mu_j d(d_j)/dx_i (transpose-Jacobian action) and
(a (x) b)_{ij} = a_i b_j.  The same field drives the director transport and
enters the momentum balance as the elastic force, which is what makes the
+/- int u.v terms cancel exactly in the discrete energy identity.

director_transport is the deformation law
    T(d, w) = (w . grad) d - alpha (grad w) d + (1 - alpha) (grad^T w) d,
the weak-form adjoint of the extra-velocity bracket.

Products are evaluated on the padded grid and truncated back, so each
operator returns the Galerkin projection of the true quadratic product.
"""

from __future__ import annotations

import numpy as np

from .fields import GridSpec, VectorField, fftn_norm, ifftn_norm
from .operators import from_padded, padded_bundle

Bundle = tuple[np.ndarray, np.ndarray]  # (padded samples, padded gradient samples)


def extra_velocity_hat(
    mu_hat: np.ndarray,
    d_hat: np.ndarray,
    alpha: float,
    grid: GridSpec,
    mu_b: Bundle | None = None,
    d_b: Bundle | None = None,
) -> np.ndarray:
    """Coefficient-space extra velocity; inputs are (dim, ...) coefficients.

    Callers evaluating several operators at the same iterate may pass
    precomputed padded bundles to avoid repeated transforms.
    """
    mu_p, gmu_p = mu_b or padded_bundle(mu_hat, grid)  # gmu_p[c, j] = d mu_c / dx_j
    d_p, gd_p = d_b or padded_bundle(d_hat, grid)
    div_mu = np.einsum("jj...->...", gmu_p)
    div_d = np.einsum("jj...->...", gd_p)
    # (mu . grad d)_i = sum_j mu_j d(d_j)/dx_i
    term = np.einsum("j...,ji...->i...", mu_p, gd_p)
    # div{mu (x) d}_i = (d . grad) mu_i + mu_i div d
    term += alpha * (np.einsum("j...,ij...->i...", d_p, gmu_p) + mu_p * div_d)
    # div{d (x) mu}_i = (mu . grad) d_i + d_i div mu
    term -= (1.0 - alpha) * (np.einsum("j...,ij...->i...", mu_p, gd_p) + d_p * div_mu)
    return from_padded(term, grid)


def director_transport_hat(
    d_hat: np.ndarray,
    w_hat: np.ndarray,
    alpha: float,
    grid: GridSpec,
    d_b: Bundle | None = None,
    w_b: Bundle | None = None,
) -> np.ndarray:
    """Coefficient-space transport operator T(d, w)."""
    d_p, gd_p = d_b or padded_bundle(d_hat, grid)
    w_p, gw_p = w_b or padded_bundle(w_hat, grid)
    t = np.einsum("j...,ij...->i...", w_p, gd_p)
    t -= alpha * np.einsum("ij...,j...->i...", gw_p, d_p)
    t += (1.0 - alpha) * np.einsum("ji...,j...->i...", gw_p, d_p)
    return from_padded(t, grid)


def convective_hat(
    u_hat: np.ndarray, grid: GridSpec, u_b: Bundle | None = None
) -> np.ndarray:
    """Coefficient-space convection (u . grad) u, dealiased."""
    u_p, gu_p = u_b or padded_bundle(u_hat, grid)
    c = np.einsum("j...,ij...->i...", u_p, gu_p)
    return from_padded(c, grid)


def _check_pair(a: VectorField, b: VectorField, grid: GridSpec | None) -> GridSpec:
    grid = grid or a.grid
    if a.grid != grid or b.grid != grid:
        raise ValueError("fields live on different grids")
    if a.components != grid.dim or b.components != grid.dim:
        raise ValueError("expected dim-component fields")
    return grid


def extra_velocity(
    mu: VectorField, d: VectorField, alpha: float, grid: GridSpec | None = None
) -> VectorField:
    """v = mu . grad d + alpha div{mu (x) d} - (1 - alpha) div{d (x) mu}."""
    grid = _check_pair(mu, d, grid)
    v = extra_velocity_hat(
        fftn_norm(mu.values, grid.dim), fftn_norm(d.values, grid.dim), alpha, grid
    )
    return VectorField(grid, ifftn_norm(v, grid.dim))


def director_transport(
    d: VectorField, w: VectorField, alpha: float, grid: GridSpec | None = None
) -> VectorField:
    """T(d, w) = (w . grad) d - alpha (grad w) d + (1 - alpha) (grad^T w) d."""
    grid = _check_pair(d, w, grid)
    t = director_transport_hat(
        fftn_norm(d.values, grid.dim), fftn_norm(w.values, grid.dim), alpha, grid
    )
    return VectorField(grid, ifftn_norm(t, grid.dim))


def elastic_force(
    mu: VectorField, d: VectorField, alpha: float, grid: GridSpec | None = None
) -> VectorField:
    """Elastic force on the fluid: the extra velocity itself, entering the
    momentum right-hand side with a plus sign."""
    return extra_velocity(mu, d, alpha, grid)
