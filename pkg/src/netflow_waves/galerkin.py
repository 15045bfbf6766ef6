"""Galerkin ODE system for the modal coefficients and its time integration.

With the sine eigenbasis the projected equation reads

    a_j'' = -lambda_j <F(u_m), w_j> + <g(u_m), w_j>,   u_m = sum_j a_j w_j,

which depends on ``a`` only, so both the position Verlet and the RK4
steppers below evaluate a single acceleration function.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import spectral
from .nonlinearity import NonlinearModel
from .spectral import apply_nonlinearity

INTEGRATORS = ("verlet", "rk4")
BLOWUP_THRESHOLD = 1e8

InitialData = Union[None, Callable, np.ndarray, list, tuple]


class ScenarioError(ValueError):
    pass


def default_dt(l_dom, m):
    """Resolve the fastest linear mode sqrt(lambda_m) with ~1e3 steps per unit."""
    return 1e-3 * (l_dom / math.pi) / math.sqrt(m)


@dataclass
class Scenario:
    """Everything a run needs.

    ``u0``/``u1`` are either callables evaluated on the grid, modal vectors
    (shorter vectors are zero-padded), or None for zero data.
    """

    model: NonlinearModel
    l_dom: float = 1.0
    m: int = 32
    n_quad: Optional[int] = None
    u0: InitialData = None
    u1: InitialData = None
    t_final: float = 1.0
    dt: Optional[float] = None
    integrator: str = "verlet"
    sample_every: int = 1
    blowup_threshold: float = BLOWUP_THRESHOLD
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_quad is None:
            self.n_quad = 4 * int(self.m)
        if self.dt is None:
            self.dt = default_dt(self.l_dom, self.m)
        if not self.dt > 0:
            raise ScenarioError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ScenarioError(f"t_final must be positive, got {self.t_final}")
        if int(self.sample_every) < 1:
            raise ScenarioError(f"sample_every must be >= 1, got {self.sample_every}")
        if self.integrator not in INTEGRATORS:
            raise ScenarioError(f"integrator must be one of {INTEGRATORS}")
        if not self.blowup_threshold > 0:
            raise ScenarioError("blowup_threshold must be positive")
        for name in ("u0", "u1"):
            data = getattr(self, name)
            if callable(data):
                ends = np.asarray(data(np.array([0.0, self.l_dom])), dtype=float)
                scale = 1.0 + float(np.max(np.abs(data(np.linspace(0, self.l_dom, 257)))))
                if np.max(np.abs(ends)) > 1e-5 * scale:
                    raise ScenarioError(f"{name} does not vanish at the endpoints")

    def basis(self):
        return spectral.build_basis(self.l_dom, self.m, self.n_quad)

    def replace(self, **changes):
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        if "m" in changes and "n_quad" not in changes:
            kw["n_quad"] = None
        return Scenario(**kw)


@dataclass
class GalerkinState:
    t: float
    a: np.ndarray
    a_dot: np.ndarray


@dataclass
class Trajectory:
    """Sampled states; ``variable`` is "u" for a_j and "v" for the v-form."""

    t: np.ndarray
    a: np.ndarray
    a_dot: np.ndarray
    status: str = "completed"
    t_stop: Optional[float] = None
    variable: str = "u"

    def __len__(self):
        return len(self.t)

    def state(self, i):
        return GalerkinState(float(self.t[i]), self.a[i], self.a_dot[i])

    @property
    def completed(self):
        return self.status == "completed"


def _modal(basis, data):
    if data is None:
        return np.zeros(basis.m)
    if callable(data):
        return spectral.project(basis, np.asarray(data(basis.x), dtype=float))
    a = np.asarray(data, dtype=float).ravel()
    if a.size > basis.m:
        return a[:basis.m].copy()
    out = np.zeros(basis.m)
    out[:a.size] = a
    return out


def init_state(scenario, basis=None):
    """Project the initial data onto span{w_1, ..., w_m}."""
    basis = basis or scenario.basis()
    return GalerkinState(0.0, _modal(basis, scenario.u0), _modal(basis, scenario.u1))


def acceleration(basis, model, a):
    acc = -basis.lam * apply_nonlinearity(basis, a, model.F)
    if model.g is not None:
        acc = acc + apply_nonlinearity(basis, a, model.rhs)
    return acc


def _verlet(acc, a, v, dt):
    half = a + 0.5 * dt * v
    v = v + dt * acc(half)
    return half + 0.5 * dt * v, v


def _rk4(acc, a, v, dt):
    k1a, k1v = v, acc(a)
    k2a, k2v = v + 0.5 * dt * k1v, acc(a + 0.5 * dt * k1a)
    k3a, k3v = v + 0.5 * dt * k2v, acc(a + 0.5 * dt * k2a)
    k4a, k4v = v + dt * k3v, acc(a + dt * k3a)
    return (a + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a),
            v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


_STEPPERS = {"verlet": _verlet, "rk4": _rk4}


class StepFailure(ArithmeticError):
    def __init__(self, t):
        super().__init__(f"non-finite state after step ending at t={t}")
        self.t = t


def step(state, basis, model, dt, integrator="verlet"):
    if not dt > 0:
        raise ValueError("dt must be positive")
    a, v = _STEPPERS[integrator](lambda x: acceleration(basis, model, x),
                                 state.a, state.a_dot, dt)
    t = state.t + dt
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
        raise StepFailure(t)
    return GalerkinState(t, a, v)


def _schedule(t_final, dt):
    n = max(1, math.ceil(t_final / dt - 1e-9))
    times = dt * np.arange(n + 1)
    times[-1] = t_final
    return times


def _run(acc, a, v, scenario, variable, norm_scale=None):
    stepper = _STEPPERS[scenario.integrator]
    times = _schedule(scenario.t_final, scenario.dt)
    every = int(scenario.sample_every)
    ts, As, Vs = [0.0], [a.copy()], [v.copy()]
    status, t_stop = "completed", None
    n = len(times) - 1
    for k in range(1, n + 1):
        h = times[k] - times[k - 1]
        try:
            a, v = stepper(acc, a, v, h)
        except FloatingPointError:
            status, t_stop = "blow-up", float(times[k])
            break
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
            status, t_stop = "step-failure", float(times[k])
            break
        size = np.max(np.abs(a if norm_scale is None else a * norm_scale))
        if size > scenario.blowup_threshold:
            status, t_stop = "blow-up", float(times[k])
            ts.append(float(times[k])); As.append(a.copy()); Vs.append(v.copy())
            break
        if k % every == 0 or k == n:
            ts.append(float(times[k])); As.append(a.copy()); Vs.append(v.copy())
    return Trajectory(np.array(ts), np.array(As), np.array(Vs), status, t_stop, variable)


def integrate(scenario, basis=None):
    """Integrate the modal system from t = 0 to ``scenario.t_final``.

    Blow-up (``max |a_j|`` above the threshold or overflow in the
    nonlinearity) and non-finite steps end the run early; they are recorded
    in ``Trajectory.status`` rather than raised.
    """
    basis = basis or scenario.basis()
    model = scenario.model
    spectral.warn_if_aliased(basis, model.polynomial_degree())
    s0 = init_state(scenario, basis)
    return _run(lambda x: acceleration(basis, model, x), s0.a, s0.a_dot, scenario, "u")


def integrate_v_form(scenario, basis=None):
    """Integrate v'' + F(-v_xx) = 0 for the modal coefficients b_j of v.

    Only the source-free case is supported.  u is recovered as
    b_j * lambda_j, see :func:`v_to_u`.
    """
    model = scenario.model
    if model.g is not None:
        raise ScenarioError("v-formulation is implemented for g == 0 only")
    basis = basis or scenario.basis()
    spectral.warn_if_aliased(basis, model.polynomial_degree())
    s0 = init_state(scenario, basis)
    lam = basis.lam

    def acc(b):
        return -apply_nonlinearity(basis, lam * b, model.F)

    return _run(acc, s0.a / lam, s0.a_dot / lam, scenario, "v", norm_scale=lam)


def v_to_u(traj, basis):
    if traj.variable != "v":
        return traj
    return Trajectory(traj.t, traj.a * basis.lam, traj.a_dot * basis.lam,
                      traj.status, traj.t_stop, "u")
