import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from netflow_waves import energy
from netflow_waves.energy import (BoundParams, PhiMismatchError, check_conservation,
                                  comparison_ode, derive_bound_params, closed_form_envelope,
                                  initial_pairing_identity, ledger, phi, phi_grid,
                                  phi_squad, tol_bound)
from netflow_waves.galerkin import Scenario, init_state, integrate
from netflow_waves.nonlinearity import check_all, custom_model, power_family
from netflow_waves.spectral import build_basis

# frozen from scipy.integrate.quad of G(u) = u^4/4
PHI_W1 = 0.37500000000000006
PHI_MIX = 0.011475000000000004          # a = (0.3, -0.2, 0.1)
# frozen from scipy.integrate.solve_ivp (rtol 1e-12) for
# y' = y - 0.5 y^2 + 2 e^t - 1, y(0) = 0.3, at t = 1
COMPARISON_Y1 = 2.8624279903253558


def make_params(**kw):
    base = dict(lam1=math.pi ** 2, omega=1.0, p=4.0, d1=0.0, b0=1.0, c=1.0, d_hat=0.0,
                d_tilde=1.0, K0=1.0, E0=0.3, phi0=0.5, gradv1_sq=0.0, C1=2.0, C2=1.0,
                c_poly=0.5, r=2.0, l_factor=2.0, C=1.0, eps=None, T=1.0, R_T=math.inf)
    base.update(kw)
    return BoundParams(**base)


def test_phi_oracles(cubic_model):
    b = build_basis(1.0, 8)
    a = np.zeros(8); a[0] = 1.0
    assert phi_grid(b, cubic_model, a) == pytest.approx(PHI_W1, rel=1e-14)
    assert phi_squad(b, cubic_model, a) == pytest.approx(PHI_W1, rel=1e-12)
    a = np.zeros(8); a[:3] = [0.3, -0.2, 0.1]
    grid, squad = phi(b, cubic_model, a)
    assert grid == pytest.approx(PHI_MIX, rel=1e-13)
    assert squad == pytest.approx(PHI_MIX, rel=1e-12)


def test_phi_mismatch_detected(cubic_model):
    # a G that is not the antiderivative of F makes the two routes disagree
    bad = custom_model(cubic_model.f, p=4.0, F=cubic_model.F_closed,
                       G=lambda r: np.asarray(r, float) ** 4)
    b = build_basis(1.0, 8)
    with pytest.raises(PhiMismatchError):
        phi(b, bad, np.eye(8)[0])


def test_tol_bound():
    assert tol_bound(0.0) == pytest.approx(1e-9)
    assert tol_bound(-1e3) == pytest.approx(1e-9 + 1e-3)


def test_comparison_ode_oracle():
    sol = comparison_ode(make_params(), 0.3, t_final=1.0, dt=1e-3)
    assert sol.t_blowup is None
    assert sol.y[-1] == pytest.approx(COMPARISON_Y1, rel=1e-10)


def test_comparison_ode_reports_blowup():
    sol = comparison_ode(make_params(c_poly=0.0, r=2.0, C1=1e6), 1.0, t_final=50.0, dt=1e-2,
                         y_max=1e8)
    assert sol.t_blowup is not None and sol.t_blowup < 50.0


@settings(max_examples=40, deadline=None)
@given(c_poly=st.floats(0.1, 100.0), E0=st.floats(0.0, 10.0), K0=st.floats(0.01, 10.0),
       d_tilde=st.floats(0.1, 2.0), T=st.floats(0.1, 2.0), r=st.sampled_from([1.5, 2.0, 3.0]))
def test_envelope_dominates_comparison(c_poly, E0, K0, d_tilde, T, r):
    C1 = (1 + d_tilde) * K0 / d_tilde
    C2 = K0 / d_tilde
    C = C1 * math.exp(d_tilde * T) - C2
    eps = energy._eps_search(c_poly, r, 2.0, C)
    assume(eps is not None)
    params = make_params(c_poly=c_poly, E0=E0, K0=K0, d_tilde=d_tilde, C1=C1, C2=C2,
                         C=C, eps=eps, r=r, T=T, p=2 * r)
    t = np.linspace(0.0, T, 101)
    env = closed_form_envelope(params, t)
    assert env[0] == pytest.approx(E0, rel=1e-12, abs=1e-12)
    y = comparison_ode(params, E0, dt=1e-3, times=t).y
    assert np.all(y <= env + tol_bound(env))


def test_eps_search_inequality():
    eps = energy._eps_search(3.0, 2.0, 2.0, 0.5)
    y = np.linspace(0, 100, 10001)
    assert eps is not None and 0 < eps <= 3.0
    assert np.all(eps * (y + 1.0) ** 2 <= 3.0 * y ** 2 + 0.5 + 1e-9)
    assert energy._eps_search(0.0, 2.0, 2.0, 0.5) is None


def test_derived_constants_cubic(cubic_scenario):
    b = cubic_scenario.basis()
    params = derive_bound_params(cubic_scenario.model, b, init_state(cubic_scenario, b),
                                 1.0, check_all(cubic_scenario.model))
    assert params.valid and params.feasible
    assert params.b0 == pytest.approx(1.0, rel=1e-9)
    assert params.c_poly == pytest.approx(math.pi ** 4 / 2, rel=1e-9)
    assert params.d1 == 0.0 and params.d_hat == 0.0
    assert params.c == pytest.approx(1 / math.pi ** 2)
    assert params.d_tilde == pytest.approx(1 / math.pi ** 2)
    assert params.phi0 == pytest.approx(1e-4 * PHI_W1, rel=1e-12)
    assert params.K0 == pytest.approx(2e-4 * PHI_W1, rel=1e-12)
    assert params.E0 == pytest.approx(0.01 / math.pi ** 2, rel=1e-12)
    assert params.C1 == pytest.approx((1 + params.d_tilde) * params.K0 / params.d_tilde)
    assert math.isfinite(params.R_T) and params.R_T > 0
    assert params.to_dict()["c_poly"] == params.c_poly


def test_invalid_without_domination():
    model = power_family(k0=3.0, source="linear")
    b = build_basis(1.0, 8)
    sc = Scenario(model, m=8, u0=[0.1])
    params = derive_bound_params(model, b, init_state(sc, b), 1.0, check_all(model))
    assert not params.valid and "domination" in params.notes


def test_ledger_and_bounds_on_short_cubic(cubic_model):
    sc = Scenario(cubic_model, m=16, u0=[0.1], t_final=0.5, dt=1e-4, integrator="rk4",
                  sample_every=50)
    b = sc.basis()
    tr = integrate(sc, b)
    params = derive_bound_params(cubic_model, b, init_state(sc, b), 0.5, check_all(cubic_model))
    led = ledger(tr, b, cubic_model, params)
    assert set(led.columns()) >= {"t", "E", "Phi", "gradvt2", "H", "gronwall", "envelope"}
    assert np.allclose(led.H, 0.5 * led.gradvt2 + led.phi)
    assert energy.energy_residual(led) < 1e-6
    reports = energy.check_all_bounds(params, tr, b, cubic_model, led)
    for name, rep in reports.items():
        assert rep.passed, name
        assert rep.worst_margin >= 0, name
    pairing = initial_pairing_identity(tr, b, cubic_model)
    assert pairing.passed and pairing.detail["mismatch"] < 1e-6


def test_conservation_report():
    led = energy.EnergyLedger(np.arange(3.0), np.zeros(3), np.zeros(3), np.zeros(3),
                              np.array([1.0, 1.0 + 5e-7, 1.0 - 2e-6]), np.zeros(3))
    rep = check_conservation(led)
    assert not rep.passed and rep.detail["drift"] == pytest.approx(2e-6)
    assert check_conservation(led, tol=1e-5).passed


def test_pairing_needs_fine_samples(cubic_model):
    sc = Scenario(cubic_model, m=8, u0=[0.1], t_final=0.2, dt=1e-3, sample_every=20)
    with pytest.raises(ValueError):
        initial_pairing_identity(integrate(sc), sc.basis(), cubic_model)
