"""Energy functionals along trajectories and the a priori bounds they obey.

Notation used throughout, with u = sum a_j w_j and v = (-Laplacian)^{-1} u:

    Phi(u)          = int G(u(x)) dx
    ||grad v_t||^2  = sum a_dot_j^2 / lambda_j
    E(t)            = ||grad v||^2 = sum a_j^2 / lambda_j
    H               = 1/2 ||grad v_t||^2 + Phi(u)
    K0              = ||grad v_1||^2 + 2 Phi(u_0)

The bound constants are not sharp; each comes from an explicit chain of
Poincare / Hoelder / Young inequalities with lambda_1 and |Omega| = l_dom.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from . import spectral
from .galerkin import acceleration, v_to_u

PHI_RTOL = 1e-8
K_S = 32
C_FLOOR = 1e-12
EPS_GRID = 64
DRIFT_TOL = 1e-6
H_FLOOR = 1e-14


class PhiMismatchError(ArithmeticError):
    def __init__(self, grid, squad):
        super().__init__(
            f"Phi disagreement: grid quadrature {grid!r} vs s-quadrature {squad!r}")
        self.grid = grid
        self.squad = squad


def tol_bound(bound):
    return 1e-9 + 1e-6 * np.abs(bound)


def phi_grid(basis, model, a):
    """Phi by grid quadrature of G(u); works on stacked modal vectors too."""
    u = spectral.synthesize(basis, a)
    return basis.h * np.sum(model.G(u), axis=-1)


def phi_squad(basis, model, a, k_s=K_S):
    """Phi = int_0^1 <F(s u), u> ds by Gauss-Legendre in s."""
    s, w = np.polynomial.legendre.leggauss(k_s)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    u = spectral.synthesize(basis, a)
    total = 0.0
    for sk, wk in zip(s, w):
        total = total + wk * basis.h * np.sum(model.F(sk * u) * u, axis=-1)
    return total


def phi(basis, model, a, k_s=K_S, rtol=PHI_RTOL):
    """Both evaluations of Phi; raises PhiMismatchError if they disagree."""
    grid = float(phi_grid(basis, model, a))
    squad = float(phi_squad(basis, model, a, k_s))
    if abs(grid - squad) > rtol * max(1.0, abs(grid)):
        raise PhiMismatchError(grid, squad)
    return grid, squad


# ---------------------------------------------------------------------------
# ledger

@dataclass
class EnergyLedger:
    t: np.ndarray
    phi: np.ndarray
    gradvt2: np.ndarray
    E: np.ndarray
    H: np.ndarray
    source_work: np.ndarray       # <g(u), v_t>
    envelopes: dict = field(default_factory=dict)

    COLUMNS = ("t", "E", "Phi", "gradvt2", "H", "source_work")

    def columns(self):
        cols = {"t": self.t, "E": self.E, "Phi": self.phi, "gradvt2": self.gradvt2,
                "H": self.H, "source_work": self.source_work}
        cols.update(self.envelopes)
        return cols


def ledger(traj, basis, model, params=None):
    """Per-sample energies of a trajectory, plus envelopes when ``params`` is given."""
    traj = v_to_u(traj, basis)
    A, V = traj.a, traj.a_dot
    lam = basis.lam
    ph = np.atleast_1d(phi_grid(basis, model, A))
    gradvt2 = np.sum(V * V / lam, axis=-1)
    E = np.sum(A * A / lam, axis=-1)
    if model.g is None:
        work = np.zeros_like(E)
    else:
        ghat = spectral.apply_nonlinearity(basis, A, model.rhs)
        work = np.sum(ghat * V / lam, axis=-1)
    out = EnergyLedger(np.asarray(traj.t, dtype=float), ph, gradvt2, E,
                       0.5 * gradvt2 + ph, work)
    if params is not None:
        out.envelopes = envelope_columns(params, out)
    return out


def energy_residual(led):
    """Max |dH/dt - <g(u), v_t>| with centred differences on the samples."""
    dt = np.diff(led.t)
    dH = np.diff(led.H) / dt
    mid = 0.5 * (led.source_work[1:] + led.source_work[:-1])
    return float(np.max(np.abs(dH - mid))) if len(dt) else 0.0


# ---------------------------------------------------------------------------
# bound constants

@dataclass
class BoundParams:
    lam1: float
    omega: float
    p: float
    d1: float
    b0: float
    c: float
    d_hat: float
    d_tilde: float
    K0: float
    E0: float
    phi0: float
    gradv1_sq: float
    C1: float
    C2: float
    c_poly: float
    r: float
    l_factor: float
    C: float
    eps: Optional[float]
    T: float
    R_T: float
    b1: float = 0.0
    valid: bool = True
    notes: str = ""

    @property
    def feasible(self):
        return self.eps is not None

    def to_dict(self):
        return {k: (None if v is None else v) for k, v in asdict(self).items()}


def _eps_search(c_poly, r, l_factor, C, n=EPS_GRID):
    """Largest eps on a log grid in (0, c_poly] with
    eps (y + l C)^r <= c_poly y^r + (l - 1) C for every probed y >= 0."""
    if not c_poly > 0:
        return None
    lC = l_factor * C
    y = np.concatenate([[0.0], lC * np.logspace(-10, 10, 2001)])
    rhs = c_poly * y ** r + (l_factor - 1.0) * C
    for eps in c_poly * np.logspace(-15, 0, n)[::-1]:
        lhs = eps * (y + lC) ** r
        if np.all(lhs <= rhs * (1.0 + 1e-12)):
            return float(eps)
    return None


def derive_bound_params(model, basis, state0, T, reports, l_factor=2.0):
    """Turn condition-report constants into the bound constants.

    Chains used:
      Gronwall rate:   <g, v_t> <= |v_t|^2/2 + |g|^2/2,
                       |v_t|^2 <= |grad v_t|^2 / lambda_1,  |g(u)|^2 <= d1 Phi
                       -> c = 1/lambda_1 + d1/2, d_hat = 0.
      velocity bound:  d_tilde = max(1/lambda_1, d1);
                       C1 = (1 + d_tilde) K0 / d_tilde,  C2 = K0 / d_tilde.
      coercivity:      G(r) >= (b0/p)|r|^p,  Hoelder and |u|_2^2 >= lambda_1 E
                       -> 2 Phi >= c_poly E^(p/2),
                       c_poly = 2 (b0/p) |Omega|^(1-p/2) lambda_1^(p/2).
    """
    if not l_factor > 1:
        raise ValueError("l_factor must exceed 1")
    lam1 = float(basis.lam[0])
    omega = basis.l_dom
    p = float(model.p)
    r = p / 2.0
    notes = []
    valid = True

    dom = reports.get("domination")
    if dom is not None and dom.satisfied:
        d1 = float(dom.constants["d1"])
    elif model.g is None:
        d1 = 0.0
    else:
        d1 = math.inf
        valid = False
        notes.append("source domination not certified; Gronwall constants undefined")
    growth = reports.get("growth")
    if growth is not None and growth.satisfied:
        b0 = float(growth.constants["b0"])
        b1 = float(growth.constants["b1"])
    else:
        b0, b1 = 0.0, 0.0
        notes.append("growth condition not certified; coercive term dropped (c_poly = 0)")

    a, v = np.asarray(state0.a, float), np.asarray(state0.a_dot, float)
    phi0 = float(phi_grid(basis, model, a))
    gradv1_sq = float(np.sum(v * v / basis.lam))
    E0 = float(np.sum(a * a / basis.lam))
    K0 = gradv1_sq + 2.0 * phi0

    c = 1.0 / lam1 + d1 / 2.0
    d_tilde = max(1.0 / lam1, d1)
    C1 = (1.0 + d_tilde) * K0 / d_tilde if valid else math.inf
    C2 = K0 / d_tilde if valid else math.inf
    c_poly = 2.0 * (b0 / p) * omega ** (1.0 - p / 2.0) * lam1 ** (p / 2.0)
    if not r > 1:
        raise ValueError("need r = p/2 > 1")
    C = max(C1 * math.exp(d_tilde * T) - C2, C_FLOOR) if valid else math.inf
    eps = _eps_search(c_poly, r, l_factor, C) if valid else None
    if valid and eps is None:
        notes.append("no feasible eps; closed-form envelope skipped")

    params = BoundParams(lam1=lam1, omega=omega, p=p, d1=d1, b0=b0, b1=b1, c=c,
                         d_hat=0.0, d_tilde=d_tilde, K0=K0, E0=E0, phi0=phi0,
                         gradv1_sq=gradv1_sq, C1=C1, C2=C2, c_poly=c_poly, r=r,
                         l_factor=float(l_factor), C=C, eps=eps, T=float(T),
                         R_T=math.inf, valid=valid, notes="; ".join(notes))
    if valid:
        params.R_T = ball_radius_bound(params)
    return params


def velocity_rhs(params, t):
    """(1/d~)[e^{d~ t}(1 + d~) - 1] K0, i.e. C1 e^{d~ t} - C2."""
    dt_ = params.d_tilde
    return (np.exp(dt_ * np.asarray(t, float)) * (1.0 + dt_) - 1.0) * params.K0 / dt_


def gronwall_envelope(params, t):
    """e^{ct} K0 + (d_hat/c)(e^{ct} - 1), bounding |grad v_t|^2 + 2 Phi."""
    ect = np.exp(params.c * np.asarray(t, float))
    return ect * params.K0 + params.d_hat / params.c * (ect - 1.0)


def closed_form_envelope(params, t):
    if params.eps is None:
        raise ValueError("envelope needs a feasible eps")
    t = np.asarray(t, float)
    r, eps = params.r, params.eps
    Y0 = params.E0 + params.l_factor * params.C
    den = (1.0 + eps * Y0 ** (r - 1.0) * np.expm1((r - 1.0) * t)) ** (1.0 / (r - 1.0))
    return np.exp(t) * Y0 / den - params.l_factor * params.C


@dataclass
class ComparisonSolution:
    t: np.ndarray
    y: np.ndarray
    t_blowup: Optional[float] = None


def comparison_ode(params, y0, t_final=None, dt=1e-3, times=None, y_max=1e150):
    """RK4 for y' = y - c_poly y^r + C1 e^{d~ t} - C2, y(0) = y0.

    Sampled at ``times`` (default: multiples of ``dt`` up to ``t_final``)
    with substeps no longer than ``dt``.
    """
    if not params.r > 1:
        raise ValueError("comparison ODE needs r > 1")
    if y0 < 0:
        raise ValueError("y0 must be nonnegative")
    if times is None:
        n = max(1, math.ceil(t_final / dt - 1e-9))
        times = np.minimum(dt * np.arange(n + 1), t_final)
    times = np.asarray(times, float)
    cp, r, dtl, C1, C2 = params.c_poly, params.r, params.d_tilde, params.C1, params.C2

    def rhs(t, y):
        return y - cp * max(y, 0.0) ** r + C1 * math.exp(dtl * t) - C2

    ys = np.full(len(times), np.nan)
    ys[0] = y = float(y0)
    for k in range(1, len(times)):
        t0, t1 = times[k - 1], times[k]
        n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
        h = (t1 - t0) / n
        t = t0
        for _ in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        if not math.isfinite(y) or y > y_max:
            return ComparisonSolution(times, ys, float(t1))
        ys[k] = y
    return ComparisonSolution(times, ys, None)


def envelope_columns(params, led):
    cols = {}
    if not params.valid:
        return cols
    t = led.t
    cols["gronwall"] = gronwall_envelope(params, t)
    cols["velocity_bound"] = velocity_rhs(params, t) - 2.0 * led.phi
    dt = min(1e-3, float(np.min(np.diff(t)))) if len(t) > 1 else 1e-3
    cols["comparison"] = comparison_ode(params, params.E0, dt=dt, times=t).y
    if params.feasible:
        cols["envelope"] = closed_form_envelope(params, t)
    return cols


def ball_radius_bound(params, n=2001):
    """R_T bounding ||grad v||_2 + ||v_x||_p on [0, T].

    ||grad v||_2 <= sqrt(max E-bound).  For the second term, v_x has zero
    mean so |v_x| <= ||u||_1, and ||u||_1 is bounded through
    2 Phi <= min(K0 e^{cT}, C1 e^{d~T} - C2) with G(r) >= (b0/p)|r|^p + (b1/2) r^2.
    """
    t = np.linspace(0.0, params.T, n)
    if params.feasible:
        e_max = float(np.max(closed_form_envelope(params, t)))
    else:
        sol = comparison_ode(params, params.E0, params.T, dt=min(1e-3, params.T / 100))
        e_max = math.inf if sol.t_blowup is not None else float(np.max(sol.y))
    phi_max = 0.5 * min(float(gronwall_envelope(params, params.T)),
                        float(velocity_rhs(params, params.T)))
    omega, p = params.omega, params.p
    u1 = math.inf
    if params.b0 > 0:
        u_p = (p * phi_max / params.b0) ** (1.0 / p)
        u1 = min(u1, omega ** (1.0 - 1.0 / p) * u_p)
    if params.b1 > 0:
        u1 = min(u1, math.sqrt(omega) * math.sqrt(2.0 * phi_max / params.b1))
    return math.sqrt(max(e_max, 0.0)) + omega ** (1.0 / p) * u1


# ---------------------------------------------------------------------------
# bound checks

@dataclass
class BoundReport:
    name: str
    passed: bool
    worst_margin: float = 0.0
    worst_t: Optional[float] = None
    skipped: bool = False
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["worst_margin"] = float(self.worst_margin)
        return d


def _compare(name, t, lhs, rhs, **detail):
    """Report for lhs <= rhs + tol_bound(rhs) samplewise; the margin is
    measured against the same tolerance, so margin >= 0 iff passed."""
    margin = rhs + tol_bound(rhs) - lhs
    ok = margin >= 0
    i = int(np.argmin(margin))
    return BoundReport(name, bool(np.all(ok)), float(margin[i]), float(t[i]), detail=detail)


def _skip(name, why):
    return BoundReport(name, True, 0.0, None, skipped=True, detail={"reason": why})


def check_conservation(led, tol=DRIFT_TOL, floor=H_FLOOR):
    H = led.H
    drift = float(np.max(np.abs(H - H[0])) / max(abs(H[0]), floor))
    return BoundReport("conservation", drift <= tol, tol - drift, None,
                       detail={"drift": drift, "tolerance": tol})


def check_gronwall(params, led):
    if not params.valid:
        return _skip("gronwall", params.notes)
    return _compare("gronwall", led.t, led.gradvt2 + 2.0 * led.phi,
                    gronwall_envelope(params, led.t))


def check_velocity_bound(params, led):
    if not params.valid:
        return _skip("velocity_bound", params.notes)
    rhs = velocity_rhs(params, led.t) - 2.0 * led.phi
    return _compare("velocity_bound", led.t, led.gradvt2, rhs)


def check_comparison(params, led):
    if not params.valid:
        return _skip("comparison", params.notes)
    dt = min(1e-3, float(np.min(np.diff(led.t)))) if len(led.t) > 1 else 1e-3
    sol = comparison_ode(params, params.E0, dt=dt, times=led.t)
    upto = len(led.t) if sol.t_blowup is None else int(np.searchsorted(led.t, sol.t_blowup))
    rep = _compare("comparison", led.t[:upto], led.E[:upto], sol.y[:upto])
    if sol.t_blowup is not None:
        rep.detail["comparison_blowup_t"] = sol.t_blowup
    return rep


def check_envelope(params, led):
    if not params.valid or not params.feasible:
        return _skip("closed_form_envelope", params.notes or "infeasible eps")
    env = closed_form_envelope(params, led.t)
    rep = _compare("closed_form_envelope", led.t, led.E, env, eps=params.eps, C=params.C)
    positive = bool(np.all(env > 0))
    rep.detail["positive"] = positive
    rep.passed = rep.passed and positive
    return rep


def check_ball_radius(params, traj, basis):
    traj = v_to_u(traj, basis)
    v = traj.a / basis.lam
    radius = np.array([
        math.sqrt(float(np.sum(a * a / basis.lam)))
        + spectral.derivative_lp_norm(basis, vk, params.p)
        for a, vk in zip(traj.a, v)])
    observed = float(radius.max()) if len(radius) else 0.0
    if not params.valid:
        rep = _skip("ball_radius", params.notes)
    else:
        rep = BoundReport("ball_radius", observed <= params.R_T, params.R_T - observed,
                          float(traj.t[int(np.argmax(radius))]))
    rep.detail.update({"observed_radius": observed, "R_T": params.R_T})
    return rep


def initial_pairing_identity(traj, basis, model, tol=1e-5):
    """Both sides of
        <grad v_t, grad v>(t) = int_0^t <v_ss, u> + int_0^t |grad v_s|^2 + <grad v_1, grad v_0>
    with v_ss taken from the acceleration, not from differencing samples.
    Returns the mismatch normalised by the largest magnitude of either side.
    """
    traj = v_to_u(traj, basis)
    t = traj.t
    if len(t) > 1 and np.max(np.diff(t)) > 1e-2 + 1e-12:
        raise ValueError("sample spacing must be <= 1e-2 for the time quadrature")
    A, V = traj.a, traj.a_dot
    lam = basis.lam
    acc = acceleration(basis, model, A)
    lhs = np.sum(V * A / lam, axis=-1)
    integrand = np.sum((acc * A + V * V) / lam, axis=-1)
    if len(t) > 2:
        cum = cumulative_simpson(integrand, x=t, initial=0.0)
    else:
        cum = np.concatenate([[0.0], 0.5 * np.diff(t) * (integrand[1:] + integrand[:-1])])
    rhs = lhs[0] + cum
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), H_FLOOR)
    mismatch = float(np.max(np.abs(lhs - rhs)) / scale)
    return BoundReport("pairing_identity", mismatch <= tol, tol - mismatch, None,
                       detail={"mismatch": mismatch, "tolerance": tol})


def check_all_bounds(params, traj, basis, model, led=None):
    led = led if led is not None else ledger(traj, basis, model)
    out = {
        "gronwall": check_gronwall(params, led),
        "velocity_bound": check_velocity_bound(params, led),
        "comparison": check_comparison(params, led),
        "closed_form_envelope": check_envelope(params, led),
    }
    if traj.completed:
        out["ball_radius"] = check_ball_radius(params, traj, basis)
    if model.g is None:
        out["conservation"] = check_conservation(led)
    return out
