import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracwave.errors import NoRoot, ParameterError, ResidualTooLarge
from fracwave.functionals import (
    FunctionalTriple,
    ModelParams,
    critical_mass,
    dichotomy_f,
    dichotomy_fmax,
    dichotomy_x0,
    energy,
    exponents,
    fibered_energy,
    fibered_q,
    gn_constant_closed_form,
    gn_constant_from_groundstate,
    gn_quotient,
    global_existence_threshold,
    pohozaev_q,
    project_to_pohozaev,
    q_of,
    q_residual,
    reduced_energy,
    triple,
)
from fracwave.grid import Field, GridSpec


def test_gates():
    ModelParams(0.75, 0.5, 6.0, 1)
    with pytest.raises(ParameterError, match="s2 < s1"):
        ModelParams(0.5, 0.5, 3.0, 1)
    with pytest.raises(ParameterError):
        ModelParams(0.5, 0.7, 3.0, 1)
    with pytest.raises(ParameterError, match="p > 2"):
        ModelParams(0.75, 0.5, 2.0, 1)
    # N = 2, s1 = 0.75: p* = 2N/(N - 2 s1) = 8, strict
    ModelParams(0.75, 0.6, 7.99, 2)
    with pytest.raises(ParameterError, match="2N/\\(N-2s1\\)") as exc:
        ModelParams(0.75, 0.6, 8.0, 2)
    assert exc.value.details["bound"] == 8.0
    with pytest.raises(ParameterError):
        ModelParams(1.2, 0.5, 3.0, 1)
    with pytest.raises(ParameterError):
        ModelParams(0.75, 0.5, 3.0, 4)


def test_regimes():
    assert ModelParams(0.75, 0.5, 5.0, 1).regime == "critical"
    assert ModelParams(0.75, 0.5, 6.0, 1).regime == "supercritical"
    assert ModelParams(0.75, 0.5, 4.0, 1).regime == "subcritical"
    assert ModelParams(0.75, 0.6, 3.5, 2).is_mass_critical
    assert exponents(ModelParams(0.75, 0.5, 5.0, 1)) == (0.0, math.inf)
    sc, sig = exponents(ModelParams(0.75, 0.6, 4.0, 2))
    assert sc == pytest.approx(0.25) and sig == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        exponents(ModelParams(0.75, 0.5, 4.0, 1))


def test_sech_functionals(sech_record):
    # u = sqrt(2) sech: a1 = 4/3, b = 16/3, mass 4, E = 2/3 - 4/3 = -2/3, Q = 0
    pm = ModelParams.single(1.0, 4.0, 1)
    u = sech_record.field
    tri = triple(u, pm)
    assert tri.a1 == pytest.approx(4 / 3, rel=1e-10)
    assert tri.b == pytest.approx(16 / 3, rel=1e-10)
    assert tri.a2 == 0.0
    assert energy(u, pm) == pytest.approx(-2 / 3, rel=1e-10)
    assert reduced_energy(u, pm) == pytest.approx(-2 / 3, rel=1e-10)
    assert abs(pohozaev_q(u, pm)) < 1e-10
    assert q_residual(tri, pm) < 1e-10


def test_triple_rejects_negative():
    with pytest.raises(ValueError):
        FunctionalTriple(-1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        FunctionalTriple(1.0, 0.0, math.nan)


triples = st.builds(
    FunctionalTriple,
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 1e3),
)
models = st.sampled_from(
    [
        ModelParams(0.75, 0.5, 6.0, 1),
        ModelParams(0.75, 0.5, 5.0, 1),
        ModelParams(0.75, 0.5, 4.0, 1),
        ModelParams(0.75, 0.6, 4.0, 2),
        ModelParams(0.9, 0.55, 3.2, 3),
        ModelParams.single(1.0, 4.0, 1),
    ]
)


@settings(max_examples=200, deadline=None)
@given(triples, models, st.floats(0.2, 5.0))
def test_fibered_q_is_log_derivative(tri, pm, t):
    # Q(u_t) = t d/dt E(u_t); centred differences in log t
    h = 1e-5
    d = (fibered_energy(tri, pm, t * math.exp(h)) - fibered_energy(tri, pm, t * math.exp(-h))) / (2 * h)
    q = fibered_q(tri, pm, t)
    scale = abs(pm.s1 * t ** (2 * pm.s1) * tri.a1) + abs(pm.q_coef * t**pm.b_exponent * tri.b) + abs(q)
    assert abs(d - q) <= 1e-7 * scale


@settings(max_examples=100, deadline=None)
@given(triples, models)
def test_fibration_at_one_matches_functionals(tri, pm):
    assert fibered_q(tri, pm, 1.0) == pytest.approx(q_of(tri, pm), rel=1e-12, abs=1e-12)
    sc = tri.scaled(pm, 1.0)
    assert (sc.a1, sc.b) == (tri.a1, tri.b)
    assert sc.a2 == (tri.a2 if pm.has_s2 else 0.0)


def _scan_root(tri, pm):
    """Independent oracle: dense log grid, then bisection on the sign change."""
    t = np.logspace(-15, 15, 60001)
    q = fibered_q(tri, pm, t)
    idx = np.nonzero((q[:-1] > 0) & (q[1:] <= 0))[0]
    assert idx.size == 1, "expected a single sign change"
    lo, hi = t[idx[0]], t[idx[0] + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fibered_q(tri, pm, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


supercritical = st.sampled_from(
    [ModelParams(0.75, 0.5, 6.0, 1), ModelParams(0.75, 0.6, 4.0, 2), ModelParams(0.9, 0.55, 4.5, 3)]
)


@settings(max_examples=150, deadline=None)
@given(st.floats(1e-2, 1e2), st.floats(1e-2, 1e2), st.floats(1e-2, 1e2), supercritical)
def test_projection_matches_scan(a1, a2, b, pm):
    tri = FunctionalTriple(a1, a2, b)
    t_u = project_to_pohozaev(tri, pm)
    assert t_u == pytest.approx(_scan_root(tri, pm), rel=1e-8)
    # the root maximizes the fibre
    e = fibered_energy(tri, pm, t_u)
    assert e >= fibered_energy(tri, pm, t_u * 1.01)
    assert e >= fibered_energy(tri, pm, t_u / 1.01)
    q1 = q_of(tri, pm)
    if q1 < 0:
        assert t_u < 1.0
    elif q1 > 0:
        assert t_u > 1.0


def test_projection_no_root_cases():
    pm = ModelParams(0.75, 0.5, 6.0, 1)
    with pytest.raises(NoRoot):
        project_to_pohozaev(FunctionalTriple(1.0, 1.0, 0.0), pm)
    crit = ModelParams(0.75, 0.5, 5.0, 1)
    with pytest.raises(NoRoot, match="a1/2 < b/p"):
        project_to_pohozaev(FunctionalTriple(10.0, 1.0, 1.0), crit)
    # mass-critical with a1/2 < b/p: the s2 term gives an interior maximum
    t = project_to_pohozaev(FunctionalTriple(1.0, 1.0, 10.0), crit)
    assert abs(fibered_q(FunctionalTriple(1.0, 1.0, 10.0), crit, t)) < 1e-9


def test_gn_constant_cubic(sech_record):
    # C = 1/sqrt(3) for s = 1, N = 1, p = 4
    c = gn_constant_from_groundstate(sech_record.field, 1.0, 4.0)
    assert c == pytest.approx(1 / math.sqrt(3), rel=1e-9)
    assert gn_quotient(sech_record.field, 1.0, 4.0) == pytest.approx(c, rel=1e-9)
    assert gn_constant_closed_form(1.0, 4.0, 1, 4.0) == pytest.approx(1 / math.sqrt(3), rel=1e-14)


def test_gn_quotient_is_below_constant(sech_record, rng):
    # phi maximizes the Weinstein quotient
    C = gn_quotient(sech_record.field, 1.0, 4.0)
    g = sech_record.field.grid
    for _ in range(20):
        w, a = rng.uniform(0.5, 3.0, size=2)
        u = Field.from_function(g, lambda x: np.exp(-((x / w) ** 2)) * (1 + a * x**2))
        assert gn_quotient(u, 1.0, 4.0) <= C * (1 + 1e-12)


def test_gn_quotient_scale_invariant(rng):
    g = GridSpec(1, 512, 40.0)
    u = Field.from_function(g, lambda x: np.exp(-(x**2)) * (1 + 0.5 * np.cos(x)))
    w = gn_quotient(u, 0.75, 5.0)
    assert gn_quotient(3.7 * u, 0.75, 5.0) == pytest.approx(w, rel=1e-12)
    with pytest.raises(ValueError):
        gn_quotient(Field.zeros(g), 0.75, 5.0)
    with pytest.raises(ParameterError):
        gn_quotient(Field(GridSpec(3, 16, 4.0), np.ones(4096)), 0.5, 6.0)


def test_gn_refuses_unconverged(grid1d):
    u = Field.from_function(grid1d, lambda x: np.exp(-(x**2)))
    with pytest.raises(ResidualTooLarge):
        gn_constant_from_groundstate(u, 1.0, 4.0)


def test_critical_mass_quintic():
    # s1 = 1, p = 6, N = 1: phi = (3 sech^2(2x))^(1/4), mass = sqrt(3) pi / 2
    m_phi = math.sqrt(3) * math.pi / 2
    C = gn_constant_closed_form(1.0, 6.0, 1, m_phi)
    assert critical_mass(1, 1.0, C) == pytest.approx(m_phi, rel=1e-13)
    assert global_existence_threshold(1, 1.0, C) == pytest.approx(math.sqrt(m_phi), rel=1e-13)
    with pytest.raises(ParameterError):
        critical_mass(1, 1.0, 0.0)


@pytest.mark.parametrize("pm", [ModelParams(0.75, 0.6, 4.0, 2), ModelParams(0.75, 0.5, 6.0, 1), ModelParams(0.9, 0.55, 4.5, 3)])
def test_dichotomy_function(pm):
    C = 0.37
    x0 = dichotomy_x0(pm, C)
    h = 1e-6 * x0
    fp = (dichotomy_f(x0 + h, pm, C) - dichotomy_f(x0 - h, pm, C)) / (2 * h)
    assert abs(fp) <= 1e-6 * x0
    assert dichotomy_fmax(pm, C) == pytest.approx(float(dichotomy_f(x0, pm, C)), rel=1e-12)
    xs = np.linspace(0.01 * x0, 5 * x0, 1000)
    assert np.all(dichotomy_f(xs, pm, C) <= dichotomy_fmax(pm, C) * (1 + 1e-12))


def test_dichotomy_needs_supercritical():
    with pytest.raises(ParameterError):
        dichotomy_x0(ModelParams(0.75, 0.5, 5.0, 1), 1.0)
