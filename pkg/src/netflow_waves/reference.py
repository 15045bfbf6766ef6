"""Independent reference solutions for cross-checking the Galerkin solver."""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .galerkin import init_state, integrate


def exact_linear_solution(basis, a0, a_dot0, t):
    """Modal coefficients of the f == 1, g == 0 solution at time ``t``."""
    k = basis.wavenumbers
    a0 = np.asarray(a0, float)
    a_dot0 = np.asarray(a_dot0, float)
    return a0 * np.cos(k * t) + a_dot0 * np.sin(k * t) / k


@dataclass
class FDTrajectory:
    t: np.ndarray
    x: np.ndarray          # interior nodes
    u: np.ndarray          # (samples, N_fd - 1)
    u_t: np.ndarray
    h: float
    status: str = "completed"
    t_stop: Optional[float] = None

    def l2(self, values):
        return np.sqrt(self.h * np.sum(np.asarray(values) ** 2, axis=-1))


def fd_reference_solve(scenario, n_fd, dt=None, sample_every=None):
    """Method of lines on a uniform grid: u_tt = D2 F(u) + g(u), RK4 in time.

    D2 is the three-point second difference with homogeneous Dirichlet
    rows, applied to F(u) (the divergence form needs no f').  Initial
    data are the spectral projections of the scenario data, evaluated at
    the FD nodes, so both solvers start from the same field.
    """
    if n_fd < 16:
        raise ValueError("n_fd must be at least 16")
    if n_fd < 8 * scenario.m:
        raise ValueError(f"n_fd={n_fd} does not resolve m={scenario.m} modes (need >= 8m)")
    model = scenario.model
    basis = scenario.basis()
    s0 = init_state(scenario, basis)
    l_dom = scenario.l_dom
    h = l_dom / n_fd
    x = h * np.arange(1, n_fd)
    u = basis.evaluate(s0.a, x)
    w = basis.evaluate(s0.a_dot, x)
    dt = scenario.dt if dt is None else dt
    every = int(scenario.sample_every if sample_every is None else sample_every)
    inv_h2 = 1.0 / (h * h)
    Fpad = np.zeros(n_fd + 1)

    def acc(v):
        Fpad[1:-1] = model.F(v)
        out = (Fpad[2:] - 2.0 * Fpad[1:-1] + Fpad[:-2]) * inv_h2
        if model.g is not None:
            out = out + model.rhs(v)
        return out

    n = max(1, math.ceil(scenario.t_final / dt - 1e-9))
    times = dt * np.arange(n + 1)
    times[-1] = scenario.t_final
    ts, us, ws = [0.0], [u.copy()], [w.copy()]
    status, t_stop = "completed", None
    for k in range(1, n + 1):
        step = times[k] - times[k - 1]
        with np.errstate(over="ignore", invalid="ignore"):
            k1u, k1w = w, acc(u)
            k2u, k2w = w + 0.5 * step * k1w, acc(u + 0.5 * step * k1u)
            k3u, k3w = w + 0.5 * step * k2w, acc(u + 0.5 * step * k2u)
            k4u, k4w = w + step * k3w, acc(u + step * k3u)
            u = u + step / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
            w = w + step / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
            status, t_stop = "step-failure", float(times[k])
            break
        if np.max(np.abs(u)) > scenario.blowup_threshold:
            status, t_stop = "blow-up", float(times[k])
            break
        if k % every == 0 or k == n:
            ts.append(float(times[k])); us.append(u.copy()); ws.append(w.copy())
    return FDTrajectory(np.array(ts), x, np.array(us), np.array(ws), h, status, t_stop)


def spectral_vs_fd(traj, basis, fd):
    """max over common sample times of the L2 difference on the FD grid."""
    n = min(len(traj.t), len(fd.t))
    if not np.allclose(traj.t[:n], fd.t[:n], rtol=0, atol=1e-12):
        raise ValueError("spectral and FD samples are not aligned")
    us = traj.a[:n] @ _eval_matrix(basis, fd.x)
    return float(np.max(fd.l2(us - fd.u[:n])))


def _eval_matrix(basis, x):
    j = np.arange(1, basis.m + 1)
    return np.sqrt(2.0 / basis.l_dom) * np.sin(np.outer(j, x) * np.pi / basis.l_dom)


# ---------------------------------------------------------------------------
# convergence study

@dataclass
class ConvergenceRow:
    kind: str            # "m" or "dt"
    coarse: float
    fine: float
    difference: float
    ratio: Optional[float]   # previous difference / this difference
    flagged: bool = False

    FIELDS = ("kind", "coarse", "fine", "difference", "ratio", "flagged")


ROUNDING = 1e-13


def _modal_l2_diff(a, b):
    m = min(a.shape[-1], b.shape[-1])
    d = np.sum((a[..., :m] - b[..., :m]) ** 2, axis=-1)
    d = d + np.sum(a[..., m:] ** 2, axis=-1) + np.sum(b[..., m:] ** 2, axis=-1)
    return float(np.max(np.sqrt(d)))


def _rows(kind, levels, diffs):
    rows = []
    prev = None
    for (lo, hi), d in zip(zip(levels, levels[1:]), diffs):
        ratio = None if prev is None or d == 0 else prev / d
        flagged = prev is not None and d >= prev and max(d, prev) > ROUNDING
        rows.append(ConvergenceRow(kind, float(lo), float(hi), d, ratio, bool(flagged)))
        prev = d
    return rows


def _workers():
    try:
        return max(1, int(os.environ.get("NETFLOW_WAVES_THREADS", "1")))
    except ValueError:
        return 1


def convergence_study(scenario, m_list=(), dt_list=()):
    """Max-in-time L2 differences between consecutive refinements.

    m-rows use ``scenario.dt``; dt-rows use ``scenario.m``.  Samples of
    the dt runs are aligned on the cadence ``sample_every * dt_list[0]``,
    so every dt must divide the coarsest one.
    """
    m_list = sorted(int(m) for m in m_list)
    dt_list = sorted((float(d) for d in dt_list), reverse=True)
    jobs = [scenario.replace(m=m) for m in m_list]
    cadence = scenario.sample_every * dt_list[0] if dt_list else None
    for d in dt_list:
        ratio = cadence / d
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError(f"dt={d} does not divide the sampling cadence {cadence}")
        jobs.append(scenario.replace(dt=d, sample_every=int(round(ratio))))
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        trajs = list(pool.map(integrate, jobs))
    for tr in trajs:
        if not tr.completed:
            raise RuntimeError(f"refinement run ended with status {tr.status}")
    m_trajs, dt_trajs = trajs[:len(m_list)], trajs[len(m_list):]
    rows = _rows("m", m_list, [_modal_l2_diff(a.a, b.a) for a, b in zip(m_trajs, m_trajs[1:])])
    rows += _rows("dt", dt_list, [_modal_l2_diff(a.a, b.a) for a, b in zip(dt_trajs, dt_trajs[1:])])
    return rows
