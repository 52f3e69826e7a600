"""Blow-up/global-existence classification, invariance monitoring and the
dilation instability experiment."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .cutoff import CutoffProfile, build_cutoff, chi_radial, chi_unit, default_cutoff, laplacian_chi, virial
from .errors import ParameterError, PerturbationNotInQc
from .evolution import Verdict, evolve
from .functionals import (
    dichotomy_fmax,
    dichotomy_x0,
    energy_of,
    exponents,
    gn_constant_closed_form,
    q_of,
    triple,
)
from .groundstate import EL_TOL
from .grid import dilate, fractional_symbol_array, mass, spectral_sum

__all__ = [
    "CutoffProfile",
    "build_cutoff",
    "chi_radial",
    "chi_unit",
    "default_cutoff",
    "laplacian_chi",
    "virial",
    "Prediction",
    "BlowupVerdict",
    "PhiQuantities",
    "phi_quantities",
    "classify",
    "monitor_invariance",
    "instability_experiment",
    "hs_distance",
    "threshold_consistency",
    "growth_exponent",
]

NEAR_RTOL = 1e-4


class Prediction(str, enum.Enum):
    GLOBAL = "GlobalPredicted"
    FINITE_TIME = "FiniteTimeBlowupPredicted"
    GROWTH_OR_BLOWUP = "GrowthOrBlowupPredicted"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass
class BlowupVerdict:
    prediction: Prediction
    rationale: list = dc_field(default_factory=list)
    quantities: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": str(self.prediction),
            "rationale": list(self.rationale),
            "quantities": dict(self.quantities),
        }


@dataclass(frozen=True)
class PhiQuantities:
    """Threshold quantities built from the ground state phi."""

    mass: float
    grad: float  # ||(-Delta)^(s1/2) phi||
    calE: float  # a1/2 - b/p, no s2 term
    sc: float
    sigma_c: float
    C: float
    energy_level: float  # calE * M^sigma_c
    grad_level: float  # grad * ||phi||^sigma_c

    def to_dict(self):
        return dict(self.__dict__)


def _check_phi(phi_record, params):
    pp = phi_record.params
    if (pp.s1, pp.p, pp.N) != (params.s1, params.p, params.N):
        raise ParameterError(
            "phi was computed for different (s1, p, N)",
            phi=pp.to_dict(),
            model=params.to_dict(),
        )
    if not phi_record.el_residual <= EL_TOL:
        raise ParameterError(
            "phi does not solve its stationary equation to tolerance",
            el_residual=phi_record.el_residual,
            q_residual=phi_record.q_residual,
        )


def phi_quantities(phi_record, params):
    sc, sig = exponents(params)
    single = params.single_operator()
    tri = triple(phi_record.field, single)
    m = mass(phi_record.field)
    cal_e = 0.5 * tri.a1 - tri.b / params.p
    grad = math.sqrt(tri.a1)
    C = gn_constant_closed_form(params.s1, params.p, params.N, m)
    if math.isinf(sig):
        e_level = g_level = math.nan
    else:
        e_level = cal_e * m**sig
        g_level = grad * m ** (0.5 * sig)
    return PhiQuantities(m, grad, cal_e, sc, sig, C, e_level, g_level)


def _compare(name, lhs, rhs, rel, rtol):
    """Record lhs <rel> rhs; 'near' when the two sides agree to rtol."""
    near = abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs), 1e-300)
    holds = {"<": lhs < rhs, ">": lhs > rhs}[rel]
    return {"test": name, "relation": rel, "lhs": lhs, "rhs": rhs, "holds": bool(holds), "near_equality": bool(near)}


def classify(psi0, phi_record, params, rtol=NEAR_RTOL):
    """Which case of the dichotomy the initial datum falls into.

    Strict inequalities whose two sides agree to ``rtol`` count as
    undecided; a verdict that would rest on one becomes Indeterminate.
    """
    if psi0.grid.dim != params.N:
        raise ParameterError(f"field dimension {psi0.grid.dim} != N={params.N}")
    _check_phi(phi_record, params)
    ph = phi_quantities(phi_record, params)
    tri = triple(psi0, params)
    e0 = energy_of(tri, params)
    m0 = mass(psi0)
    g0 = math.sqrt(tri.a1)
    q = {
        "energy": e0,
        "mass": m0,
        "grad_s1": g0,
        "s_c": ph.sc,
        "sigma_c": ph.sigma_c,
        "phi": ph.to_dict(),
        "p_upper_finite_time": 2.0 + 4.0 * params.s1,
    }
    rationale = []

    def decided(entries):
        return all(e["holds"] and not e["near_equality"] for e in entries)

    def near(entries):
        return any(e["near_equality"] for e in entries)

    if params.is_mass_critical:
        rationale.append({"test": "s_c = 0", "holds": True})
        e_neg = _compare("E(psi0) < 0", e0, 0.0, "<", rtol)
        e_neg["near_equality"] = abs(e0) <= rtol * (0.5 * tri.a1 + 0.5 * tri.a2)
        rationale.append(e_neg)
        if decided([e_neg]):
            return BlowupVerdict(Prediction.GROWTH_OR_BLOWUP, rationale, q)
        return BlowupVerdict(Prediction.INDETERMINATE, rationale, q)

    rationale.append({"test": "s_c > 0", "lhs": ph.sc, "rhs": 0.0, "holds": ph.sc > 0})
    x_psi = g0 * m0 ** (0.5 * ph.sigma_c)
    q["energy_level"] = e0 * m0**ph.sigma_c
    q["grad_level"] = x_psi
    c_energy = _compare("E(psi0) M(psi0)^sigma_c < calE(phi) M(phi)^sigma_c", q["energy_level"], ph.energy_level, "<", rtol)
    c_below = _compare("||D^s1 psi0|| ||psi0||^sigma_c < ||D^s1 phi|| ||phi||^sigma_c", x_psi, ph.grad_level, "<", rtol)
    c_above = _compare("||D^s1 psi0|| ||psi0||^sigma_c > ||D^s1 phi|| ||phi||^sigma_c", x_psi, ph.grad_level, ">", rtol)
    rationale += [c_energy, c_below, c_above]

    if decided([c_energy, c_below]):
        return BlowupVerdict(Prediction.GLOBAL, rationale, q)

    p_gate = _compare("p < 2 + 4 s1", params.p, 2.0 + 4.0 * params.s1, "<", 0.0)
    rationale.append(p_gate)
    if p_gate["holds"]:
        e_neg = _compare("E(psi0) < 0", e0, 0.0, "<", rtol)
        e_neg["near_equality"] = abs(e0) <= rtol * (0.5 * tri.a1 + 0.5 * tri.a2)
        rationale.append(e_neg)
        if decided([e_neg]):
            return BlowupVerdict(Prediction.FINITE_TIME, rationale, q)
        if e0 >= 0 and decided([c_energy, c_above]):
            return BlowupVerdict(Prediction.FINITE_TIME, rationale, q)
    if near(rationale[1:]):
        q["note"] = "near-equality in a deciding inequality"
    return BlowupVerdict(Prediction.INDETERMINATE, rationale, q)


def monitor_invariance(traj, phi_record, params, x0=None):
    """Sign of ||D^s1 psi(t)|| ||psi(t)||^sigma_c - x0 along the trajectory.

    ``x0`` defaults to the closed-form critical point of f with the GN
    constant measured from phi.
    """
    sc, sig = exponents(params)
    if math.isinf(sig):
        raise ParameterError("the invariant sets need s_c > 0")
    if x0 is None:
        ph = phi_quantities(phi_record, params)
        x0 = dichotomy_x0(params, ph.C)
    g = np.asarray(traj.grad_s1_series)
    m = np.asarray(traj.mass_series)
    x = g * m ** (0.5 * sig)
    signs = np.sign(x - x0).astype(int)
    flips = [
        {"index": int(i), "t": float(traj.times[i]), "from": int(signs[i - 1]), "to": int(signs[i])}
        for i in range(1, signs.size)
        if signs[i] != signs[i - 1]
    ]
    return {
        "x0": float(x0),
        "initial_sign": int(signs[0]) if signs.size else 0,
        "samples": int(signs.size),
        "flips": flips,
        "n_flips": len(flips),
        "min_gap": float(np.min(np.abs(x - x0))) if signs.size else math.nan,
    }


def threshold_consistency(phi_record, params):
    """x0 and f(x0) from parameters against phi-derived values (relative errors)."""
    ph = phi_quantities(phi_record, params)
    x0 = dichotomy_x0(params, ph.C)
    fmax = dichotomy_fmax(params, ph.C)
    return {
        "x0": x0,
        "x_phi": ph.grad_level,
        "x0_rel_err": abs(x0 - ph.grad_level) / abs(ph.grad_level),
        "fmax": fmax,
        "energy_level_phi": ph.energy_level,
        "fmax_rel_err": abs(fmax - ph.energy_level) / abs(ph.energy_level),
    }


def hs_distance(u, v, s):
    """||u - v||_{H^s} with weight 1 + |xi|^(2s)."""
    d = u - v
    w = 1.0 + fractional_symbol_array(u.grid, float(s))
    return math.sqrt(spectral_sum(u.grid, d.hat(), w))


def growth_exponent(traj, tail=0.5):
    """Least-squares slope of log grad_s1 against log t over the last
    ``tail`` fraction of samples (qualitative comparison with s1)."""
    t = np.asarray(traj.times)
    g = np.asarray(traj.grad_s1_series)
    keep = t > 0
    t, g = t[keep], g[keep]
    if t.size < 3:
        return math.nan
    k = max(2, int(round(tail * t.size)))
    slope, _ = np.polyfit(np.log(t[-k:]), np.log(g[-k:]), 1)
    return float(slope)


def instability_experiment(uc_record, tau, horizon, policy, params, cutoff=None):
    """Evolve v = (u_c)_tau and report gradient growth.

    v has E(v) < E(u_c) and Q(v) < 0 for tau slightly above 1; the run is
    refused when either fails.
    """
    uc = uc_record.field
    if not uc_record.converged:
        raise ParameterError(
            "u_c record is not converged",
            el_residual=uc_record.el_residual,
            q_residual=uc_record.q_residual,
        )
    if tau > 2.0:
        raise ParameterError(f"tau must lie in (1, 2], got {tau}")
    tri_c = triple(uc, params)
    e_c = energy_of(tri_c, params)
    v = dilate(uc, float(tau)) if tau > 0 else uc
    tri_v = triple(v, params)
    e_v = energy_of(tri_v, params)
    q_v = q_of(tri_v, params)
    if not (tau > 1.0 and e_v < e_c and q_v < 0.0):
        raise PerturbationNotInQc(
            f"dilation tau={tau} does not enter the set E < E(u_c), Q < 0",
            tau=tau,
            energy_v=e_v,
            energy_uc=e_c,
            q_v=q_v,
        )
    dist = hs_distance(v, uc, params.s1)
    traj = evolve(v, horizon, policy, params, cutoff=cutoff)
    return {
        "tau": float(tau),
        "energy_v": e_v,
        "energy_uc": e_c,
        "q_v": q_v,
        "hs_distance": dist,
        "growth_factor": traj.growth_factor,
        "verdict": str(traj.verdict),
        "blowup": traj.verdict in (Verdict.BLOWUP, Verdict.DT_UNDERFLOW),
        "t_reached": traj.metadata["t_reached"],
        "notes": list(v.notes),
        "trajectory": traj,
    }
