import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracwave.diagnostics import (
    Prediction,
    build_cutoff,
    chi_radial,
    chi_unit,
    classify,
    default_cutoff,
    growth_exponent,
    hs_distance,
    instability_experiment,
    laplacian_chi,
    monitor_invariance,
    phi_quantities,
    threshold_consistency,
    virial,
)
from fracwave.errors import BoxTooSmall, GridMismatch, ParameterError, PerturbationNotInQc
from fracwave.evolution import StepPolicy, TrajectoryRecord, evolve
from fracwave.functionals import ModelParams, energy
from fracwave.grid import Field, GridSpec
from fracwave.groundstate import record_from_field, solve_single_fractional

# ---- cut-off -------------------------------------------------------------


def test_cutoff_inner_region_and_plateau():
    r = np.linspace(0, 1, 101)
    v, d1, d2 = chi_unit(r)
    assert np.allclose(v, r**2 / 2, atol=1e-15) and np.allclose(d1, r) and np.all(d2 == 1.0)
    # the plateau is chi(1) plus the integral of chi' over the blend
    blend, _ = quad(lambda x: chi_unit(np.array([x]))[1][0], 1.0, 10.0, epsabs=1e-13)
    v_out, d1_out, d2_out = chi_unit(np.array([10.0, 50.0]))
    assert v_out[0] == pytest.approx(0.5 + blend, rel=1e-12)
    assert v_out[1] == v_out[0] and np.all(d1_out == 0) and np.all(d2_out == 0)


@pytest.mark.parametrize("r0", [1.0, 10.0])
def test_cutoff_is_c2_at_joins(r0):
    eps = 1e-9
    lo = [a[0] for a in chi_unit(np.array([r0 - eps]))]
    hi = [a[0] for a in chi_unit(np.array([r0 + eps]))]
    assert np.allclose(lo, hi, atol=1e-7)


def test_cutoff_certificate_bounds():
    r = np.linspace(0, 30, 30001)
    for R in (0.5, 1.0, 3.0):
        _, d1, d2 = chi_radial(r, R)
        assert np.all(d2 <= 1 + 1e-14)
        assert np.all(d1 <= r + 1e-14)
        assert np.all(d1 >= 0)
        for N in (1, 2, 3):
            assert np.all(laplacian_chi(r, R, N) <= N + 1e-12)
    assert laplacian_chi(np.array([0.0]), 2.0, 3)[0] == 3.0


def test_cutoff_large_radius_limit():
    r = np.linspace(0, 5, 51)
    v, d1, _ = chi_radial(r, 1e6)
    assert np.allclose(v, r**2 / 2, rtol=1e-14) and np.allclose(d1, r, rtol=1e-14)


def test_cutoff_box_checks():
    g = GridSpec(2, 64, 40.0)
    build_cutoff(1.99, g)
    with pytest.raises(BoxTooSmall):
        build_cutoff(2.0, g)
    with pytest.raises(ValueError):
        build_cutoff(0.0, g)
    assert default_cutoff(g).R < 2.0


def test_virial_real_field_is_zero():
    g = GridSpec(2, 64, 20.0)
    u = Field.from_function(g, lambda x, y: np.exp(-(x**2) - 2 * y**2))
    assert abs(virial(u, default_cutoff(g))) < 1e-14


def test_virial_boosted_gaussian():
    # psi = g(x - x0) e^{ikx}, chi' = x where g lives: M = 2 k x0 int g^2
    grid = GridSpec(1, 1024, 200.0)
    cut = build_cutoff(9.0, grid)
    k, x0 = 0.7, 2.0
    u = Field.from_function(grid, lambda x: np.exp(-((x - x0) ** 2) / 2 + 1j * k * x))
    assert virial(u, cut) == pytest.approx(2 * k * x0 * math.sqrt(math.pi), rel=1e-10)
    with pytest.raises(GridMismatch):
        virial(Field.zeros(GridSpec(1, 512, 200.0)), cut)


# ---- classification -------------------------------------------------------


def radial(grid, a, w=1.0):
    return Field(grid, a * np.exp(-0.5 * grid.radius() ** 2 / w**2) + 0j)


def test_classify_small_data_global(phi_2d, model_2d):
    v = classify(radial(phi_2d.field.grid, 0.3), phi_2d, model_2d)
    assert v.prediction is Prediction.GLOBAL
    assert v.to_dict()["verdict"] == "GlobalPredicted"


def test_classify_negative_energy(phi_2d, model_2d):
    psi = 2.0 * phi_2d.field
    assert energy(psi, model_2d) < 0
    assert classify(psi, phi_2d, model_2d).prediction is Prediction.FINITE_TIME


def test_classify_phi_itself_is_indeterminate(phi_2d, model_2d):
    v = classify(phi_2d.field, phi_2d, model_2d)
    assert v.prediction is Prediction.INDETERMINATE
    near = [e for e in v.rationale if e.get("near_equality")]
    assert near, "the gradient comparison sits exactly on the threshold"


def test_classify_scaled_phi_single_operator(phi_2d):
    # without the s2 term, a phi with 0 < a < 1 is below both levels
    pm = phi_2d.params
    assert classify(0.9 * phi_2d.field, phi_2d, pm).prediction is Prediction.GLOBAL
    assert classify(0.9 * phi_2d.field, phi_2d, pm, rtol=0.5).prediction is Prediction.INDETERMINATE
    assert classify(1.1 * phi_2d.field, phi_2d, pm).prediction is Prediction.FINITE_TIME


def test_classify_mixed_term_lifts_scaled_phi(phi_2d, model_2d):
    # the s2 energy puts (1 - eps) phi above the energy level
    v = classify((1 - 1e-3) * phi_2d.field, phi_2d, model_2d)
    assert v.prediction is Prediction.INDETERMINATE
    assert v.quantities["energy_level"] > v.quantities["phi"]["energy_level"]


def test_classify_exponent_gate():
    # p >= 2 + 4 s1 drops the finite-time branch
    pm = ModelParams(0.75, 0.6, 6.0, 2)
    phi = solve_single_fractional(0.75, 6.0, GridSpec(2, 128, 40.0))
    psi = 2.0 * phi.field
    assert energy(psi, pm) < 0
    v = classify(psi, phi, pm)
    assert v.prediction is Prediction.INDETERMINATE
    assert any(e["test"] == "p < 2 + 4 s1" and not e["holds"] for e in v.rationale)


def test_classify_mass_critical():
    pm = ModelParams(0.75, 0.6, 3.5, 2)
    phi = solve_single_fractional(0.75, 3.5, GridSpec(2, 128, 40.0))
    big = 2.5 * phi.field
    assert energy(big, pm) < 0
    assert classify(big, phi, pm).prediction is Prediction.GROWTH_OR_BLOWUP
    small = radial(phi.field.grid, 0.2)
    assert classify(small, phi, pm).prediction is Prediction.INDETERMINATE


def test_classify_rejects_wrong_phi(phi_2d, model_2d):
    psi = radial(phi_2d.field.grid, 0.3)
    with pytest.raises(ParameterError, match="different"):
        classify(psi, phi_2d, ModelParams(0.75, 0.6, 4.5, 2))
    bad = record_from_field(1.1 * phi_2d.field, phi_2d.params, 1.0)
    with pytest.raises(ParameterError, match="stationary"):
        classify(psi, bad, model_2d)
    with pytest.raises(ParameterError):
        classify(Field.zeros(GridSpec(1, 64, 10.0)), phi_2d, model_2d)


def test_threshold_consistency(phi_2d, model_2d):
    rep = threshold_consistency(phi_2d, model_2d)
    assert rep["x0_rel_err"] < 1e-4
    assert rep["fmax_rel_err"] < 1e-4
    ph = phi_quantities(phi_2d, model_2d)
    assert ph.sc == pytest.approx(0.25) and ph.sigma_c == pytest.approx(2.0)


def test_monitor_invariance(phi_2d, model_2d):
    psi = radial(phi_2d.field.grid, 0.6, w=2.0)
    traj = evolve(psi, 1.0, StepPolicy(dt0=1e-2, monitor_every=1), model_2d)
    rep = monitor_invariance(traj, phi_2d, model_2d)
    assert rep["n_flips"] == 0 and rep["initial_sign"] == -1 and rep["min_gap"] > 0
    # negative control: a threshold inside the range of the trajectory flips
    sig = 2.0
    x = np.asarray(traj.grad_s1_series) * np.asarray(traj.mass_series) ** (sig / 2)
    assert x.max() > x.min()
    wrong = monitor_invariance(traj, phi_2d, model_2d, x0=0.5 * (x[0] + x[-1]))
    assert wrong["n_flips"] >= 1
    with pytest.raises(ParameterError):
        monitor_invariance(traj, phi_2d, ModelParams(0.75, 0.6, 3.5, 2))


def test_hs_distance():
    g = GridSpec(1, 64, 2 * math.pi)
    u = Field.from_function(g, lambda x: np.exp(3j * x))
    assert hs_distance(u, u, 0.75) == 0.0
    # ||e^{3ix}||^2 = 2 pi (1 + 3^1.5)
    assert hs_distance(u, Field.zeros(g), 0.75) == pytest.approx(math.sqrt(2 * math.pi * (1 + 3**1.5)), rel=1e-13)


def test_growth_exponent_on_power_law():
    t = np.linspace(0.1, 10, 200)
    tr = TrajectoryRecord(times=list(t), grad_s1_series=list(2.0 * t**0.75))
    assert growth_exponent(tr) == pytest.approx(0.75, rel=1e-12)
    assert math.isnan(growth_exponent(TrajectoryRecord(times=[0.0, 1.0], grad_s1_series=[1.0, 2.0])))


# ---- dilation instability ------------------------------------------------


@pytest.fixture(scope="module")
def phi_quintic():
    rec = solve_single_fractional(0.75, 6.0, GridSpec(1, 16384, 1600.0))
    assert rec.converged
    return rec


def test_instability_rejections(phi_quintic):
    pm = phi_quintic.params
    policy = StepPolicy(dt0=1e-3)
    for tau in (1.0, 0.9):
        with pytest.raises(PerturbationNotInQc):
            instability_experiment(phi_quintic, tau, 0.01, policy, pm)
    with pytest.raises(ParameterError):
        instability_experiment(phi_quintic, 2.5, 0.01, policy, pm)
    bad = record_from_field(1.1 * phi_quintic.field, pm, 1.0)
    with pytest.raises(ParameterError, match="not converged"):
        instability_experiment(bad, 1.1, 0.01, policy, pm)


def test_instability_dilations_approach_u_c(phi_quintic):
    pm = phi_quintic.params
    policy = StepPolicy(dt0=1e-3)
    out = [instability_experiment(phi_quintic, tau, 0.005, policy, pm) for tau in (1.2, 1.1, 1.05)]
    d = [r["hs_distance"] for r in out]
    assert d[0] > d[1] > d[2] > 0
    for r in out:
        assert r["energy_v"] < r["energy_uc"] and r["q_v"] < 0
        assert r["verdict"] == "CompletedHorizon" and r["t_reached"] == pytest.approx(0.005)
