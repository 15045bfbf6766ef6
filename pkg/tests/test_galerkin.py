import numpy as np
import pytest

from netflow_waves.galerkin import (GalerkinState, Scenario, ScenarioError, StepFailure,
                                    acceleration, default_dt, init_state, integrate,
                                    integrate_v_form, step, v_to_u)
from netflow_waves.nonlinearity import custom_model, power_family
from netflow_waves.reference import exact_linear_solution

from conftest import w


def test_scenario_defaults(linear_model):
    sc = Scenario(linear_model)
    assert sc.m == 32 and sc.n_quad == 128
    assert sc.dt == pytest.approx(default_dt(1.0, 32))
    assert sc.replace(m=8).n_quad == 32


@pytest.mark.parametrize("kw", [{"dt": -1.0}, {"t_final": 0.0}, {"integrator": "euler"},
                                {"sample_every": 0}, {"blowup_threshold": 0.0}])
def test_scenario_validation(linear_model, kw):
    with pytest.raises(ScenarioError):
        Scenario(linear_model, **kw)


def test_initial_data_must_vanish(linear_model):
    with pytest.raises(ScenarioError, match="endpoints"):
        Scenario(linear_model, u0=lambda x: np.cos(np.pi * x))


def test_init_state_projects_callable_and_pads_modes(linear_model):
    sc = Scenario(linear_model, m=8, u0=lambda x: 2.0 * w(3, x), u1=[0.5])
    s0 = init_state(sc)
    assert np.allclose(s0.a, [0, 0, 2, 0, 0, 0, 0, 0], atol=1e-14)
    assert np.allclose(s0.a_dot, [0.5] + [0] * 7)


def test_linear_acceleration_is_minus_lambda_a(linear_model):
    sc = Scenario(linear_model, m=6)
    b = sc.basis()
    a = np.linspace(-1, 1, 6)
    assert np.allclose(acceleration(b, linear_model, a), -b.lam * a, atol=1e-11)


@pytest.mark.parametrize("integrator,order", [("verlet", 2), ("rk4", 4)])
def test_integrator_order(linear_model, integrator, order):
    errs = []
    for dt in (2e-2, 1e-2):
        sc = Scenario(linear_model, m=4, u0=[1.0, 0.0, 0.3], t_final=0.8, dt=dt,
                      integrator=integrator, sample_every=1000)
        tr = integrate(sc)
        b = sc.basis()
        exact = exact_linear_solution(b, init_state(sc).a, np.zeros(4), tr.t[-1])
        errs.append(np.linalg.norm(tr.a[-1] - exact))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(order, abs=0.3)


def test_schedule_records_final_time(linear_model):
    sc = Scenario(linear_model, m=4, u0=[1.0], t_final=0.105, dt=0.01, sample_every=3)
    tr = integrate(sc)
    assert tr.t[0] == 0.0 and tr.t[-1] == 0.105
    assert np.allclose(np.diff(tr.t[:-1]), 0.03)
    assert tr.completed


def test_blowup_is_reported_not_raised():
    model = power_family(k0=1.0, k1=10.0, k2=1.0, p=4.0, p1=1.0, force=True)
    sc = Scenario(model, m=16, u0=[0.5, 0, 0, 0, 0, 0, 0.01], t_final=1.0, dt=1e-4,
                  integrator="rk4", sample_every=100, blowup_threshold=4.0)
    tr = integrate(sc)
    assert tr.status == "blow-up"
    assert 0 < tr.t_stop < 1.0
    assert tr.t[-1] == tr.t_stop and np.max(np.abs(tr.a[-1])) > 4.0


def test_step_failure(linear_model):
    nan_model = custom_model(lambda r: r, p=4.0, F=lambda r: np.where(np.abs(r) > 1, np.inf, r),
                             G=lambda r: r * r / 2)
    sc = Scenario(linear_model, m=4)
    with pytest.raises((StepFailure, FloatingPointError)):
        step(GalerkinState(0.0, np.full(4, 2.0), np.zeros(4)), sc.basis(), nan_model, 1e-3)
    with pytest.raises(ValueError):
        step(GalerkinState(0.0, np.zeros(4), np.zeros(4)), sc.basis(), linear_model, 0.0)


def test_semidiscrete_energy_conserved(cubic_model):
    sc = Scenario(cubic_model, m=16, u0=[0.1, 0.05], u1=[0.0, 0.2], t_final=0.5, dt=2e-4,
                  integrator="rk4", sample_every=50)
    b = sc.basis()
    tr = integrate(sc, b)
    H = 0.5 * np.sum(tr.a_dot ** 2 / b.lam, axis=1) + b.h * np.sum(
        cubic_model.G(tr.a @ b.synth), axis=1)
    assert np.max(np.abs(H - H[0])) / H[0] < 1e-9


def test_v_form_matches_direct(cubic_model):
    sc = Scenario(cubic_model, m=16, u0=[0.1], u1=[0.0, 0.05], t_final=0.3, dt=2e-4,
                  integrator="rk4", sample_every=50)
    b = sc.basis()
    direct = integrate(sc, b)
    via_v = v_to_u(integrate_v_form(sc, b), b)
    assert np.max(np.linalg.norm(direct.a - via_v.a, axis=1)) < 1e-10
    assert v_to_u(direct, b) is direct


def test_v_form_needs_source_free():
    model = power_family(k0=3.0, source="one-minus-cos")
    with pytest.raises(ScenarioError):
        integrate_v_form(Scenario(model, m=4))
