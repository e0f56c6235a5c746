import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natrod.errors import InvalidParameterError, PreconditionError
from natrod.oracle import reference_integrate
from natrod.torsion import (
    InputHistory,
    SmoothedStep,
    Tabulated,
    TorsionParams,
    circular_section,
    creep_mu_zero,
    creep_response,
    nondimensionalize,
    quasistatic_rhs,
    redimensionalize,
    relaxation_response,
)

positive = st.floats(0.1, 10.0)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        TorsionParams(0, -1, 1, 1, 1)
    with pytest.raises(InvalidParameterError):
        TorsionParams(0, 1, 0, 1, 1)
    with pytest.raises(InvalidParameterError):
        TorsionParams(0, 1, 1, float("nan"), 1)


def test_nondimensionalization_round_trip():
    L, T, rhoA = 2.0, 0.5, 3.0
    I11, I22 = circular_section(0.1, rhoA)
    p = nondimensionalize(L, T, rhoA, I11, I22, M33=4.0, M_d33=5.0, A33=6.0, A_d33=7.0)
    assert np.isclose(p.nu, 0.1**2 / (2 * L**2))
    back = redimensionalize(p, L, T, rhoA)
    assert np.allclose([back["M33"], back["M_d33"], back["A33"], back["A_d33"]], [4.0, 5.0, 6.0, 7.0])
    assert np.isclose(back["I_sum"], I11 + I22)


def test_smoothed_step_shape():
    w = SmoothedStep(2.0, 0.1)
    t = np.linspace(-0.1, 0.3, 401)
    v = w.value(t)
    assert v[0] == 0 and v[-1] == 2.0
    assert np.all(np.diff(v) >= 0)
    assert w.derivative(0.0) == 0 and w.derivative(0.1) == 0
    assert np.isclose(w.derivative(0.05), 2.0 * 1.5 / 0.1)
    with pytest.raises(PreconditionError):
        SmoothedStep(1.0, 0.0).derivative(0.5)


def test_tabulated_history():
    tab = Tabulated((0.0, 1.0, 2.0), (0.0, 1.0, 1.5))
    assert np.isclose(tab.value(1.0), 1.0)
    assert tab.value(-1.0) == 0 and tab.value(5.0) == 1.5
    with pytest.raises(InvalidParameterError):
        Tabulated((0.5, 1.0), (0.0, 1.0))


def test_history_kind_mismatch():
    p = TorsionParams(0, 1, 1, 1, 1)
    with pytest.raises(PreconditionError):
        relaxation_response(p, InputHistory.torque_step(1.0), [1.0])
    with pytest.raises(PreconditionError):
        creep_response(p, InputHistory.twist_step(1.0), [1.0])
    with pytest.raises(PreconditionError):
        creep_mu_zero(p, InputHistory.torque_step(1.0), [1.0])
    with pytest.raises(PreconditionError):
        quasistatic_rhs(TorsionParams(0, 0, 1, 1, 1), 0, 0, 1)


@given(positive, positive, positive, positive)
@settings(max_examples=30, deadline=None)
def test_relaxation_solves_the_ode(a, ad, mu, mud):
    # the closed form satisfies mu_d u_d' = alpha u - (alpha+alpha_d) u_d with u_d(0) = 0
    p = TorsionParams(0, mu, mud, a, ad)
    t = np.linspace(0, 3.0 / p.relaxation_rate, 50)
    tr = relaxation_response(p, InputHistory.twist_step(1.0), t)
    h = 1e-6
    up = relaxation_response(p, InputHistory.twist_step(1.0), t + h).u_d
    dn = relaxation_response(p, InputHistory.twist_step(1.0), np.maximum(t - h, 0)).u_d
    dud = (up - dn) / (t + h - np.maximum(t - h, 0))
    resid = mud * dud - (a * tr.u - (a + ad) * tr.u_d)
    assert np.max(np.abs(resid[1:])) < 1e-6 * max(1, a)


@given(positive, positive, positive, positive, st.floats(-3, 3).filter(lambda x: abs(x) > 0.01))
@settings(max_examples=30, deadline=None)
def test_creep_step_matches_ode(a, ad, mu, mud, m0):
    p = TorsionParams(0, mu, mud, a, ad)
    t = np.linspace(0, 5.0, 41)
    tr = creep_response(p, InputHistory.torque_step(m0), t)
    ref = reference_integrate(lambda tt, y: list(quasistatic_rhs(p, y[0], y[1], m0)), [0.0, 0.0], (0, 5.0), tol=1e-11)
    Y = ref(t)
    assert np.max(np.abs(Y[0] - tr.u)) < 1e-7 * max(1, np.max(np.abs(Y)))
    assert np.max(np.abs(Y[1] - tr.u_d)) < 1e-7 * max(1, np.max(np.abs(Y)))


def test_smoothed_creep_recursion_matches_reference():
    p = TorsionParams(0, 0.7, 1.3, 2.0, 0.5)
    hist = InputHistory.torque_step(1.0, ramp_duration=0.2)
    t = np.linspace(0, 6.0, 61)
    tr = creep_response(p, hist, t)

    def rhs(tt, y):
        return list(quasistatic_rhs(p, y[0], y[1], float(hist(tt))))

    Y = reference_integrate(rhs, [0.0, 0.0], (0, 6.0), tol=1e-11, breakpoints=(0.2,))(t)
    assert np.max(np.abs(Y[0] - tr.u)) < 1e-5
    assert np.max(np.abs(Y[1] - tr.u_d)) < 1e-5


def test_smoothed_relaxation_recursion_and_torque():
    p = TorsionParams(0, 0.5, 1.0, 2.0, 1.0)
    hist = InputHistory.twist_step(1.0, ramp_duration=0.1)
    t = np.linspace(0, 4.0, 81)
    tr = relaxation_response(p, hist, t)

    def rhs(tt, y):
        return [(p.alpha * float(hist(tt)) - (p.alpha + p.alpha_d) * y[0]) / p.mu_d]

    ud = reference_integrate(rhs, [0.0], (0, 4.0), tol=1e-11, breakpoints=(0.1,))(t)[0]
    assert np.max(np.abs(ud - tr.u_d)) < 1e-5
    m = p.mu * hist.waveform.derivative(t) + p.alpha * (tr.u - ud)
    assert np.max(np.abs(m - tr.m_regular)) < 1e-4
    assert tr.m_impulse_amplitude == 0.0


def test_tabulated_creep_runs_and_is_continuous():
    p = TorsionParams(0, 1, 1, 1, 1)
    hist = InputHistory("torque", Tabulated((0.0, 1.0, 3.0), (0.0, 1.0, 0.0)))
    tr = creep_response(p, hist, np.linspace(0, 5, 101))
    assert np.all(np.isfinite(tr.u))
    assert np.max(np.abs(np.diff(tr.u))) < 0.1


def test_mu_zero_step_formulas():
    p = TorsionParams(0, 0, 2.0, 3.0, 0.5)
    t = np.linspace(0, 10, 11)
    tr = creep_mu_zero(p, InputHistory.torque_step(1.5), t)
    ud = 1.5 / 0.5 * (1 - np.exp(-0.5 * t / 2.0))
    assert np.allclose(tr.u_d, ud, rtol=1e-13, atol=1e-15)
    assert np.allclose(tr.u, 1.5 / 3.0 + ud, rtol=1e-13)


def test_mu_zero_smoothed_matches_reference():
    p = TorsionParams(0, 0, 2.0, 3.0, 0.5)
    hist = InputHistory.torque_step(1.5, ramp_duration=0.3)
    t = np.linspace(0, 5, 51)
    tr = creep_mu_zero(p, hist, t)
    ref = reference_integrate(lambda tt, y: [(float(hist(tt)) - 0.5 * y[0]) / 2.0], [0.0], (0, 5), tol=1e-12, breakpoints=(0.3,))
    assert np.max(np.abs(ref(t)[0] - tr.u_d)) < 1e-6
