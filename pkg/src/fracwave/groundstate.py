"""Stationary states by Petviashvili iteration and mass shooting in lambda.

The stationary problem is written as K u = |u|^(p-2) u with a positive
Fourier multiplier K, either (-Delta)^s1 + 1 for phi or
(-Delta)^s1 + (-Delta)^s2 + lambda for the normalized solutions.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import MassUnreachable, NegativeSeed, NonConvergence, ParameterError
from .functionals import ModelParams, energy_of, q_residual, triple
from .grid import Field, GridSpec, boundary_mass, fft, fractional_symbol_array, ifft, mass

log = logging.getLogger(__name__)

EL_TOL = 1e-9
Q_TOL = 1e-6
MAX_ITER = 5000
STALL_LIMIT = 200
SCAN_EL_TOL = 1e-6


@dataclass(eq=False)
class GroundStateRecord:
    field: Field
    lam: float
    mass: float
    energy: float
    q_residual: float
    el_residual: float
    iterations: int
    converged: bool
    params: ModelParams
    a1: float = 0.0
    a2: float = 0.0
    b: float = 0.0
    boundary_mass: float = 0.0
    history: list = dc_field(default_factory=list)

    def to_dict(self):
        return {
            "lambda": self.lam,
            "mass": self.mass,
            "energy": self.energy,
            "q_residual": self.q_residual,
            "el_residual": self.el_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "a1": self.a1,
            "a2": self.a2,
            "b": self.b,
            "boundary_mass": self.boundary_mass,
            "params": self.params.to_dict(),
            "grid": self.field.grid.to_dict(),
        }


@dataclass
class GammaBranch:
    model: ModelParams
    samples: list  # (c, gamma, lambda) sorted by c
    records: list
    skipped: list = dc_field(default_factory=list)

    @property
    def c(self):
        return np.array([s[0] for s in self.samples])

    @property
    def gamma(self):
        return np.array([s[1] for s in self.samples])

    @property
    def lam(self):
        return np.array([s[2] for s in self.samples])

    def monotonicity(self, slack=1e-6):
        """Largest increase of gamma between consecutive samples (<= slack is fine)."""
        g = self.gamma
        worst = float(np.max(np.diff(g))) if g.size > 1 else -math.inf
        return {"nonincreasing": worst <= slack, "max_increase": worst}


def default_seed(grid, width=1.0, amplitude=1.0):
    r2 = sum(c**2 for c in grid.coords())
    return Field(grid, amplitude * np.exp(-0.5 * r2 / width**2))


def _center_index(grid):
    return (grid.n // 2,) * grid.dim


def _recenter(u):
    """Shift the maximum to the box centre and symmetrize about it."""
    g_shape = u.shape
    imax = np.unravel_index(np.argmax(u), g_shape)
    shift = tuple(c - i for c, i in zip((s // 2 for s in g_shape), imax))
    if any(shift):
        u = np.roll(u, shift, axis=tuple(range(u.ndim)))
    for ax in range(u.ndim):
        # x -> -x about index n/2 maps j -> (n - j) mod n
        mirrored = np.roll(np.flip(u, axis=ax), 1, axis=ax)
        u = 0.5 * (u + mirrored)
    return u


def _check_seed(seed):
    v = seed.values
    if np.max(np.abs(v.imag)) > 1e-12 * max(np.max(np.abs(v)), 1e-300):
        raise NegativeSeed("seed must be real")
    re = v.real
    top = re.max()
    if top <= 0.0:
        raise NegativeSeed("seed must be nonzero and nonnegative")
    if re.min() < -1e-10 * top:
        raise NegativeSeed(f"seed has negative values down to {re.min():.3e}")
    return np.clip(re, 0.0, None)


def petviashvili(ksym, p, seed, max_iter=MAX_ITER, el_tol=EL_TOL, target=None, log_every=0):
    """Solve K u = |u|^(p-2) u for positive u.

    ``ksym`` is the symbol of K on the seed's grid. Iterates until the
    residual ||K u - |u|^(p-2)u|| / ||u|| drops below ``target``
    (default el_tol/100) or stops improving; returns (u, residual,
    iterations, history).
    """
    grid = seed.grid
    u = _check_seed(seed)
    gam = (p - 1.0) / (p - 2.0)
    target = el_tol * 1e-2 if target is None else target
    history = []
    best = (math.inf, u, 0)
    stall = 0
    for it in range(1, max_iter + 1):
        uhat = fft(u)
        nl = kernels.power_nonlinearity(u, p)
        nlhat = fft(nl)
        ku = ifft(ksym * uhat).real
        unorm = math.sqrt(np.sum(u * u))
        res = math.sqrt(np.sum((ku - nl) ** 2)) / unorm if unorm > 0 else math.inf
        history.append(res)
        if log_every and it % log_every == 0:
            log.debug("petviashvili it=%d residual=%.3e", it, res)
        if res < best[0]:
            best = (res, u, it - 1)
            stall = 0
        else:
            stall += 1
        if res <= target or (best[0] <= el_tol and stall >= 50) or stall >= STALL_LIMIT:
            break
        if not math.isfinite(res) or unorm == 0.0:
            break
        num = float(np.sum(ksym * np.abs(uhat) ** 2))
        den = float(np.real(np.vdot(uhat, nlhat)))
        if den <= 0.0:
            break
        factor = (num / den) ** gam
        u = ifft(factor * nlhat / ksym).real
        u = _recenter(u)
    res, u, iters = best
    return u, res, max(iters, 1), history


def _record(u_vals, grid, params, lam, res, iters, history, q_tol=Q_TOL, el_tol=EL_TOL):
    u = Field(grid, u_vals)
    tri = triple(u, params)
    qres = q_residual(tri, params)
    if params.has_s2:
        en = energy_of(tri, params)
    else:
        en = 0.5 * tri.a1 - tri.b / params.p
    return GroundStateRecord(
        field=u,
        lam=lam,
        mass=mass(u),
        energy=en,
        q_residual=qres,
        el_residual=res,
        iterations=iters,
        converged=bool(res <= el_tol and qres <= q_tol),
        params=params,
        a1=tri.a1,
        a2=tri.a2,
        b=tri.b,
        boundary_mass=boundary_mass(u),
        history=history,
    )


def solve_single_fractional(s1, p, grid, seed=None, max_iter=MAX_ITER, el_tol=EL_TOL, q_tol=Q_TOL, strict=True):
    """Ground state phi of (-Delta)^s1 phi + phi = phi^(p-1); lambda is 1."""
    params = ModelParams.single(s1, p, grid.dim)
    seed = default_seed(grid) if seed is None else seed
    ksym = fractional_symbol_array(grid, params.s1) + 1.0
    u, res, iters, hist = petviashvili(ksym, p, seed, max_iter=max_iter, el_tol=el_tol)
    rec = _record(u, grid, params, 1.0, res, iters, hist, q_tol=q_tol, el_tol=el_tol)
    if strict and not res <= el_tol:
        raise NonConvergence(
            f"Petviashvili did not reach residual {el_tol:.1e} (best {res:.3e})",
            residual=res,
            iterations=iters,
            history=hist[-20:],
        )
    return rec


def mixed_symbol(grid, params, lam):
    k = fractional_symbol_array(grid, params.s1) + lam
    if params.has_s2:
        k = k + fractional_symbol_array(grid, params.s2)
    return k


def solve_mixed_fixed_lambda(params, lam, grid, seed=None, max_iter=MAX_ITER, el_tol=EL_TOL, q_tol=Q_TOL, strict=True):
    """Positive solution of (-Delta)^s1 u + (-Delta)^s2 u + lam u = u^(p-1)."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if grid.dim != params.N:
        raise ParameterError("grid dimension differs from params.N")
    seed = default_seed(grid) if seed is None else seed
    u, res, iters, hist = petviashvili(mixed_symbol(grid, params, lam), params.p, seed, max_iter=max_iter, el_tol=el_tol)
    rec = _record(u, grid, params, float(lam), res, iters, hist, q_tol=q_tol, el_tol=el_tol)
    if strict and not res <= el_tol:
        raise NonConvergence(
            f"Petviashvili did not reach residual {el_tol:.1e} at lambda={lam} (best {res:.3e})",
            residual=res,
            iterations=iters,
            history=hist[-20:],
            norm_history=[float(np.sqrt(mass(rec.field)))],
        )
    return rec


def el_residual(u, ksym, p):
    """||K u - |u|^(p-2) u|| / ||u|| for a real profile u."""
    v = np.real(u.values)
    nl = kernels.power_nonlinearity(v, p)
    ku = ifft(ksym * fft(v)).real
    return float(math.sqrt(np.sum((ku - nl) ** 2) / np.sum(v * v)))


def record_from_field(u, params, lam=1.0):
    """Re-derive a record (residuals, functionals) for a stored profile."""
    if u.grid.dim != params.N:
        raise ParameterError("grid dimension differs from params.N")
    res = el_residual(u, mixed_symbol(u.grid, params, lam), params.p)
    return _record(np.real(u.values), u.grid, params, float(lam), res, 0, [])


def natural_width(params, lam):
    """1/xi with xi^(2 s1) + xi^(2 s2) = lam: the length scale set by K."""
    f = lambda k: k ** (2 * params.s1) + (k ** (2 * params.s2) if params.has_s2 else 0.0) - lam  # noqa: E731
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return 1.0 / brentq(f, 0.0, hi, xtol=1e-14 * hi)


def fwhm(u):
    """Full width at half maximum of |u| along the first axis through its peak."""
    a = np.abs(u.values)
    idx = np.unravel_index(np.argmax(a), a.shape)
    line = a[(slice(None),) + tuple(idx[1:])]
    above = np.nonzero(line >= 0.5 * line.max())[0]
    return max(float(above[-1] - above[0] + 1), 1.0) * u.grid.dx


def solve_scaled(params, lam, n, points_per_width=24.0, probe_n=None, **kw):
    """Solve at lam on a box sized to the solution.

    A probe solve on a box of 64 natural widths measures the FWHM; the final
    grid has n points per axis with spacing FWHM / points_per_width.
    """
    N = params.N
    w = natural_width(params, lam)
    probe_n = probe_n or min(n, 2048 if N == 1 else 128)
    probe = GridSpec(N, probe_n, 64.0 * w)
    rec0 = solve_mixed_fixed_lambda(params, lam, probe, seed=default_seed(probe, width=w), strict=False)
    fw = fwhm(rec0.field)
    grid = GridSpec(N, n, n * fw / points_per_width)
    return solve_mixed_fixed_lambda(params, lam, grid, seed=default_seed(grid, width=fw / 2.355), **kw)


def mass_shoot(
    params,
    c,
    grid,
    lam_range=(1e-3, 1e3),
    n_scan=7,
    tol=1e-6,
    max_secant=60,
    seed=None,
    box="fixed",
    points_per_width=24.0,
    extend_limits=(1e-6, 1e8),
):
    """Ground state of prescribed mass c, found by shooting on lambda.

    ``box="fixed"`` solves every lambda on ``grid``. ``box="scaled"`` keeps
    ``grid.n`` but resizes the box per lambda (see :func:`solve_scaled`);
    the coarse scan then runs on the probe grids only.
    """
    if not c > 0:
        raise ParameterError(f"mass must be positive, got {c}")
    if box not in ("fixed", "scaled"):
        raise ParameterError(f"box must be 'fixed' or 'scaled', got {box!r}")

    def solve(lam, warm=None):
        if box == "scaled":
            return solve_scaled(params, lam, grid.n, points_per_width, strict=False)
        return solve_mixed_fixed_lambda(
            params, lam, grid, seed=warm if warm is not None else seed, strict=False
        )

    def scan_solve(lam):
        if box == "scaled":
            w = natural_width(params, lam)
            probe = GridSpec(params.N, min(grid.n, 2048 if params.N == 1 else 128), 64.0 * w)
            rec = solve_mixed_fixed_lambda(params, lam, probe, seed=default_seed(probe, width=w), strict=False)
        else:
            rec = solve_mixed_fixed_lambda(params, lam, grid, seed=seed, strict=False)
        # bracketing only needs the mass to a few digits
        if not rec.el_residual <= SCAN_EL_TOL:
            raise NonConvergence("scan solve failed", residual=rec.el_residual)
        return rec

    lams = np.logspace(math.log10(lam_range[0]), math.log10(lam_range[1]), n_scan)
    table = []
    for lam in lams:
        try:
            rec = scan_solve(lam)
            # a state filling the box is the constant solution, not a bound state
            m = rec.mass if rec.boundary_mass < 1e-3 else math.nan
        except NonConvergence:
            m = math.nan
        table.append((float(lam), float(m)))

    def find_bracket():
        for (l0, m0), (l1, m1) in zip(table[:-1], table[1:]):
            if math.isfinite(m0) and math.isfinite(m1) and (m0 - c) * (m1 - c) <= 0:
                return (l0, l1)
        return None

    def extend(at_top):
        lam = table[-1][0] * 10.0 if at_top else table[0][0] / 10.0
        try:
            rec = scan_solve(lam)
            m = rec.mass if rec.boundary_mass < 1e-3 else math.nan
        except NonConvergence:
            m = math.nan
        if at_top:
            table.append((lam, float(m)))
        else:
            table.insert(0, (lam, float(m)))
        return math.isfinite(m)

    # the scan range is only a starting point: follow the mass trend outward
    bracket = find_bracket()
    while bracket is None:
        finite = [(lam, m) for lam, m in table if math.isfinite(m)]
        if len(finite) < 2:
            break
        (la, ma), (lb, mb) = finite[-2], finite[-1]
        (lc, mc), (ld, md) = finite[0], finite[1]
        up = (mb - ma) * (c - mb) > 0 and table[-1][0] < extend_limits[1]
        down = (mc - md) * (c - mc) > 0 and table[0][0] > extend_limits[0]
        if not (up or down):
            break
        if not extend(at_top=up):
            break
        bracket = find_bracket()
    if bracket is None:
        raise MassUnreachable(f"mass {c} not bracketed by the lambda scan", scan=table, c=c)

    # Illinois false position on (log lambda, log mass - log c)
    r0, r1 = solve(bracket[0]), solve(bracket[1])
    x0, x1 = math.log(bracket[0]), math.log(bracket[1])
    f0, f1 = math.log(r0.mass / c), math.log(r1.mass / c)
    best = r0 if abs(f0) < abs(f1) else r1
    if abs(best.mass - c) <= tol * c:
        return best
    if f0 * f1 > 0:
        raise MassUnreachable(
            f"mass {c} left the bracket after refinement", scan=table, c=c, ends=[r0.mass, r1.mass]
        )
    side = 0
    for _ in range(max_secant):
        x = (x0 * f1 - x1 * f0) / (f1 - f0)
        warm = r0 if abs(x - x0) < abs(x - x1) else r1
        rec = solve(math.exp(x), warm.field)
        f = math.log(rec.mass / c)
        if abs(rec.mass - c) < abs(best.mass - c):
            best = rec
        if abs(rec.mass - c) <= tol * c:
            return rec
        if f * f1 < 0:
            x0, f0, r0 = x1, f1, r1
            side = 0
        else:
            if side == 1:
                f0 *= 0.5
            side = 1
        x1, f1, r1 = x, f, rec
    raise MassUnreachable(
        f"secant on lambda did not reach |mass - c|/c <= {tol}", scan=table, c=c, best_mass=best.mass
    )


def _branch_cell(args):
    params, c, grid, kw = args
    try:
        return mass_shoot(params, c, grid, **kw), None
    except (MassUnreachable, NonConvergence) as exc:
        return None, exc.to_dict()


def worker_count():
    env = os.environ.get("FRACWAVE_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def gamma_branch(params, c_list, grid, workers=1, **shoot_kw):
    """gamma(c) = E(u_c) along the ground-state branch."""
    cells = [(params, float(c), grid, shoot_kw) for c in c_list]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_branch_cell, cells))
    else:
        results = [_branch_cell(cell) for cell in cells]
    pairs = []
    skipped = []
    for (_, c, _, _), (rec, err) in zip(cells, results):
        if rec is None or not rec.converged:
            skipped.append({"c": c, "error": err or "record not converged"})
            continue
        pairs.append((c, rec))
    pairs.sort(key=lambda cr: cr[0])
    samples = [(c, rec.energy, rec.lam) for c, rec in pairs]
    return GammaBranch(params, samples, [rec for _, rec in pairs], skipped)
