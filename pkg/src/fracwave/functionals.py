"""Energy, Pohozaev functional, fibration maps and Gagliardo-Nirenberg constants.

Everything that needs the three integrals

    a1 = ||(-Delta)^(s1/2) u||^2,  a2 = ||(-Delta)^(s2/2) u||^2,  b = int |u|^p

goes through a single :class:`FunctionalTriple`, so that E, Q and the
fibration t -> E(u_t) stay consistent to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoRoot, ParameterError, ResidualTooLarge
from .grid import fractional_symbol_array, spectral_sum

MASS_CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Model (s1, s2, p) on an N-dimensional grid.

    ``s2 = 0`` switches the second operator off, which is how the
    single-operator problems (validation at s1 = 1 and the equation for phi)
    are expressed.
    """

    s1: float
    s2: float
    p: float
    N: int

    def __post_init__(self):
        s1, s2, p, N = float(self.s1), float(self.s2), float(self.p), int(self.N)
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "N", N)
        if N not in (1, 2, 3):
            raise ParameterError(f"N must be 1, 2 or 3, got {N}")
        if not 0.0 < s1 <= 1.0:
            raise ParameterError(f"need 0 < s1 <= 1, got s1={s1}")
        if not 0.0 <= s2 < s1:
            raise ParameterError(
                f"need 0 < s2 < s1, got s2={s2}, s1={s1}", inequality="0 < s2 < s1"
            )
        if not p > 2.0:
            raise ParameterError(f"need p > 2, got p={p}", inequality="p > 2")
        if N > 2.0 * s1:
            pstar = 2.0 * N / (N - 2.0 * s1)
            if not p < pstar:
                raise ParameterError(
                    f"energy-subcritical gate violated: need p < 2N/(N-2s1) = {pstar:.17g},"
                    f" got p={p}",
                    inequality="p < 2N/(N-2*s1)",
                    bound=pstar,
                )

    @classmethod
    def single(cls, s1, p, N):
        return cls(s1, 0.0, p, N)

    @property
    def has_s2(self):
        return self.s2 > 0.0

    @property
    def mass_critical_p(self):
        return 2.0 + 4.0 * self.s1 / self.N

    @property
    def b_exponent(self):
        """Power of t multiplying int |u|^p under u -> u_t."""
        return 0.5 * self.N * (self.p - 2.0)

    @property
    def q_coef(self):
        """N(p-2)/(2p), the weight of int |u|^p in Q."""
        return self.N * (self.p - 2.0) / (2.0 * self.p)

    @property
    def is_mass_critical(self):
        pc = self.mass_critical_p
        return abs(self.p - pc) <= MASS_CRITICAL_RTOL * pc

    @property
    def regime(self):
        if self.is_mass_critical:
            return "critical"
        return "supercritical" if self.p > self.mass_critical_p else "subcritical"

    def single_operator(self):
        return ModelParams(self.s1, 0.0, self.p, self.N)

    def to_dict(self):
        return {"s1": self.s1, "s2": self.s2, "p": self.p, "N": self.N}


@dataclass(frozen=True)
class FunctionalTriple:
    a1: float
    a2: float
    b: float

    def __post_init__(self):
        for name in ("a1", "a2", "b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def scaled(self, params, t):
        """Triple of u_t from the triple of u (exact scaling law)."""
        return FunctionalTriple(
            t ** (2 * params.s1) * self.a1,
            t ** (2 * params.s2) * self.a2 if params.has_s2 else 0.0,
            t**params.b_exponent * self.b,
        )


def triple(u, params, uhat=None):
    if uhat is None:
        uhat = u.hat()
    g = u.grid
    a1 = spectral_sum(g, uhat, fractional_symbol_array(g, params.s1))
    a2 = spectral_sum(g, uhat, fractional_symbol_array(g, params.s2)) if params.has_s2 else 0.0
    b = kernels.abs_power_sum(u.values, params.p) * g.cell_volume
    return FunctionalTriple(a1, a2, b)


def energy_of(tri, params):
    return 0.5 * tri.a1 + 0.5 * tri.a2 - tri.b / params.p


def q_of(tri, params):
    return params.s1 * tri.a1 + params.s2 * tri.a2 - params.q_coef * tri.b


def energy(u, params):
    return energy_of(triple(u, params), params)


def reduced_energy(u, params):
    """Energy without the s2 term: a1/2 - b/p."""
    tri = triple(u, params)
    return 0.5 * tri.a1 - tri.b / params.p


def pohozaev_q(u, params):
    return q_of(triple(u, params), params)


def q_residual(tri, params):
    """|Q| / (s1 a1 + s2 a2)."""
    scale = params.s1 * tri.a1 + params.s2 * tri.a2
    if scale == 0.0:
        return 0.0 if tri.b == 0.0 else math.inf
    return abs(q_of(tri, params)) / scale


def fibered_energy(tri, params, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("fibration parameter must be positive")
    out = (
        0.5 * t ** (2 * params.s1) * tri.a1
        + (0.5 * t ** (2 * params.s2) * tri.a2 if params.has_s2 else 0.0)
        - t**params.b_exponent * tri.b / params.p
    )
    return out if out.ndim else float(out)


def fibered_q(tri, params, t):
    """Q(u_t) = t d/dt E(u_t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("fibration parameter must be positive")
    out = (
        params.s1 * t ** (2 * params.s1) * tri.a1
        + (params.s2 * t ** (2 * params.s2) * tri.a2 if params.has_s2 else 0.0)
        - params.q_coef * t**params.b_exponent * tri.b
    )
    return out if out.ndim else float(out)


def _fibered_q_dt(tri, params, t):
    e1, e2, eb = 2 * params.s1, 2 * params.s2, params.b_exponent
    return (
        params.s1 * e1 * t ** (e1 - 1) * tri.a1
        + (params.s2 * e2 * t ** (e2 - 1) * tri.a2 if params.has_s2 else 0.0)
        - params.q_coef * eb * t ** (eb - 1) * tri.b
    )


def project_to_pohozaev(tri, params, rtol=1e-12, t_lo=1e-6, t_max=1e12):
    """Unique t_u > 0 with Q(u_t) = 0; E(u_t) is maximal there."""
    if tri.b <= 0.0:
        raise NoRoot("int |u|^p vanishes: Q(u_t) > 0 for every t", b=tri.b)
    if params.is_mass_critical and not 0.5 * tri.a1 < tri.b / params.p:
        raise NoRoot(
            "mass-critical fibre has no maximum: need a1/2 < b/p",
            inequality="a1/2 < b/p",
            lhs=0.5 * tri.a1,
            rhs=tri.b / params.p,
        )
    q = lambda t: fibered_q(tri, params, t)  # noqa: E731
    lo = t_lo
    while q(lo) <= 0.0:
        lo *= 1e-3
        if lo < 1e-300:
            raise NoRoot("Q(u_t) not positive near t = 0")
    hi = 1.0
    while q(hi) > 0.0:
        hi *= 2.0
        if hi > t_max:
            raise NoRoot(
                f"Q(u_t) stays positive up to t = {t_max:g}; no maximum on the fibre",
                regime=params.regime,
            )
    if lo >= hi:
        lo = hi * 1e-6
        while q(lo) <= 0.0:
            lo *= 1e-3
    # bisection in log t to a coarse bracket, then safeguarded Newton
    while hi / lo - 1.0 > 1e-3:
        mid = math.sqrt(lo * hi)
        if q(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t = math.sqrt(lo * hi)
    for _ in range(100):
        qt = q(t)
        if qt == 0.0:
            return t
        if qt > 0.0:
            lo = t
        else:
            hi = t
        d = _fibered_q_dt(tri, params, t)
        step = qt / d if d != 0.0 else 0.0
        t_new = t - step
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= rtol * t:
            return t_new
        t = t_new
        if hi - lo <= rtol * t:
            return t
    return t


def gn_exponents(N, s, p):
    k = N * (p - 2.0) / (4.0 * s)
    return k, 0.5 * p - k


def gn_quotient(u, s, p, uhat=None):
    """Weinstein quotient int|u|^p / (a_s^k M^(p/2-k)), k = N(p-2)/(4s)."""
    N = u.grid.dim
    if N > 2 * s and not p < 2.0 * N / (N - 2.0 * s):
        raise ParameterError("Gagliardo-Nirenberg needs p < 2N/(N-2s)")
    if p < 2:
        raise ParameterError("Gagliardo-Nirenberg needs p >= 2")
    if uhat is None:
        uhat = u.hat()
    g = u.grid
    m = spectral_sum(g, uhat)
    if m == 0.0:
        raise ValueError("Weinstein quotient undefined for the zero field")
    a = spectral_sum(g, uhat, fractional_symbol_array(g, float(s)))
    b = kernels.abs_power_sum(u.values, p) * g.cell_volume
    k, r = gn_exponents(N, s, p)
    return b / (a**k * m**r)


def gn_constant_closed_form(s1, p, N, phi_mass):
    """Optimal GN constant from the mass of the ground state phi."""
    Np2 = N * (p - 2.0)
    lead = 2.0 * s1 * p / Np2
    base = Np2 / (2.0 * s1 * p - Np2)
    expo = (4.0 * s1 - N * p + 2.0 * N) / (4.0 * s1)
    return lead * base**expo * phi_mass ** (0.5 * (2.0 - p))


def gn_constant_from_groundstate(phi, s1, p, N=None, tol=1e-5):
    """Closed-form constant, refusing fields that fail the Pohozaev check."""
    N = phi.grid.dim if N is None else N
    params = ModelParams.single(s1, p, N)
    tri = triple(phi, params)
    res = q_residual(tri, params)
    if not res <= tol:
        raise ResidualTooLarge(
            f"Pohozaev residual {res:.3e} of phi exceeds {tol:.1e}", q_residual=res
        )
    m = spectral_sum(phi.grid, phi.hat())
    return gn_constant_closed_form(s1, p, N, m)


def critical_mass(N, s1, C):
    if not C > 0:
        raise ParameterError(f"GN constant must be positive, got {C}")
    return ((N + 2.0 * s1) / (N * C)) ** (N / (2.0 * s1))


def global_existence_threshold(N, s1, C):
    """L2-norm bound below which mass-critical data exist globally."""
    return math.sqrt(critical_mass(N, s1, C))


def exponents(params):
    """(s_c, sigma_c); sigma_c is +inf at the mass-critical exponent."""
    if params.p < params.mass_critical_p and not params.is_mass_critical:
        raise ParameterError(
            f"s_c needs p >= 2 + 4 s1/N = {params.mass_critical_p:.17g}, got p={params.p}",
            inequality="p >= 2 + 4*s1/N",
        )
    if params.is_mass_critical:
        return 0.0, math.inf
    sc = 0.5 * params.N - 2.0 * params.s1 / (params.p - 2.0)
    return sc, (params.s1 - sc) / sc


def _f_power(params):
    return params.N * (params.p - 2.0) / (2.0 * params.s1)


def dichotomy_f(x, params, C):
    return 0.5 * np.asarray(x) ** 2 - (C / params.p) * np.asarray(x) ** _f_power(params)


def dichotomy_x0(params, C):
    if not params.p > params.mass_critical_p or params.is_mass_critical:
        raise ParameterError("f has an interior critical point only for p > 2 + 4 s1/N")
    Np2 = params.N * (params.p - 2.0)
    return (2.0 * params.p * params.s1 / (C * Np2)) ** (2.0 * params.s1 / (Np2 - 4.0 * params.s1))


def dichotomy_fmax(params, C):
    """max f = f(x0), closed form."""
    Np2 = params.N * (params.p - 2.0)
    s1 = params.s1
    return (Np2 - 4 * s1) / (2 * Np2) * (2 * params.p * s1 / (C * Np2)) ** (4 * s1 / (Np2 - 4 * s1))
