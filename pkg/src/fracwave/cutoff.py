"""Radial cut-off chi_R and the localized virial quantity.

chi_R(r) = R^2 chi(r/R) with chi(r) = r^2/2 on [0, 1], constant on
[10, inf), and a quintic blend on [1, 10]. Writing s = r - 1, the blend's
derivative is g(s) = 1 + s + B s^3 + C s^4 with g(9) = g'(9) = 0; the
s^2 coefficient is zero so chi''' is also continuous at r = 1. On the blend
g' - 1 = s^2 (3B + 4C s) <= 0, hence chi'' <= 1, chi' <= r and
Laplacian(chi) <= N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoxTooSmall, GridMismatch
from .grid import gradient

_OUTER = 10.0
# g(9) = 0 and g'(9) = 0 solved for (B, C)
_C4 = 7.0 / 2187.0
_B3 = (-1.0 - 2916.0 * _C4) / 243.0
_PLATEAU = 0.5 + (9.0 + 0.5 * 81.0 + _B3 * 9.0**4 / 4.0 + _C4 * 9.0**5 / 5.0)


def chi_unit(r):
    """(chi, chi', chi'') of the unit profile at radii r >= 0."""
    r = np.asarray(r, dtype=float)
    s = r - 1.0
    inner = r <= 1.0
    outer = r >= _OUTER
    blend = ~(inner | outer)
    val = np.empty_like(r)
    d1 = np.empty_like(r)
    d2 = np.empty_like(r)
    val[inner] = 0.5 * r[inner] ** 2
    d1[inner] = r[inner]
    d2[inner] = 1.0
    sb = s[blend]
    val[blend] = 0.5 + sb + 0.5 * sb**2 + _B3 * sb**4 / 4.0 + _C4 * sb**5 / 5.0
    d1[blend] = 1.0 + sb + _B3 * sb**3 + _C4 * sb**4
    d2[blend] = 1.0 + 3.0 * _B3 * sb**2 + 4.0 * _C4 * sb**3
    val[outer] = _PLATEAU
    d1[outer] = 0.0
    d2[outer] = 0.0
    return val, d1, d2


def chi_radial(r, R):
    """(chi_R, chi_R', chi_R'') at radii r."""
    v, d1, d2 = chi_unit(np.asarray(r, dtype=float) / R)
    return R**2 * v, R * d1, d2


def laplacian_chi(r, R, N):
    """Delta chi_R = chi_R'' + (N-1) chi_R'/r (limit N at r = 0)."""
    r = np.asarray(r, dtype=float)
    _, d1, d2 = chi_radial(r, R)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, d1 / np.where(r > 0, r, 1.0), 1.0)
    return d2 + (N - 1) * ratio


@dataclass(frozen=True, eq=False)
class CutoffProfile:
    R: float
    grid: object
    chi_values: np.ndarray
    grad_chi_values: tuple


def build_cutoff(R, grid):
    if not R > 0:
        raise ValueError(f"cut-off radius must be positive, got {R}")
    if not _OUTER * R < 0.5 * grid.length:
        raise BoxTooSmall(
            f"cut-off needs 10R < L/2: 10*{R} >= {0.5 * grid.length}", R=R, box_length=grid.length
        )
    r = grid.radius()
    chi, d1, _ = chi_radial(r, R)
    with np.errstate(divide="ignore", invalid="ignore"):
        over_r = np.where(r > 0, d1 / np.where(r > 0, r, 1.0), 0.0)
    grads = tuple(over_r * c for c in grid.coords())
    return CutoffProfile(float(R), grid, chi, grads)


def default_cutoff(grid):
    """Largest R the box admits, with a small margin."""
    return build_cutoff(grid.length / (2.0 * _OUTER) * 0.96, grid)


def virial(psi, cut, grads=None):
    """M[psi] = 2 Im int conj(psi) grad(chi_R) . grad(psi)."""
    if psi.grid != cut.grid:
        raise GridMismatch("field and cut-off live on different grids")
    if grads is None:
        grads = gradient(psi)
    acc = sum(gc * gp for gc, gp in zip(cut.grad_chi_values, grads))
    return 2.0 * float(np.imag(np.sum(np.conj(psi.values) * acc))) * psi.grid.cell_volume
