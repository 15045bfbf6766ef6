import numpy as np
import pytest

from netflow_waves.galerkin import Scenario, integrate
from netflow_waves.reference import (ConvergenceRow, _rows, convergence_study,
                                     exact_linear_solution, fd_reference_solve,
                                     spectral_vs_fd)
from netflow_waves.spectral import build_basis


def test_exact_linear_solution_phase():
    b = build_basis(1.0, 3)
    a = exact_linear_solution(b, [1.0, 0.0, 1.0], [0.0, 2 * np.pi, 0.0], 0.25)
    assert np.allclose(a, [np.cos(np.pi / 4), 1.0, np.cos(0.75 * np.pi)], atol=1e-15)


def _fd_error(linear_model, n_fd):
    sc = Scenario(linear_model, m=16, u0=[1.0], t_final=0.5, dt=1e-3, integrator="rk4",
                  sample_every=50)
    fd = fd_reference_solve(sc, n_fd)
    b = sc.basis()
    a0 = np.eye(16)[0]
    exact = np.array([b.evaluate(exact_linear_solution(b, a0, np.zeros(16), t), fd.x)
                      for t in fd.t])
    return float(np.max(fd.l2(fd.u - exact)))


def test_fd_second_order(linear_model):
    e1, e2 = _fd_error(linear_model, 128), _fd_error(linear_model, 256)
    assert np.log2(e1 / e2) == pytest.approx(2.0, abs=0.1)


def test_fd_agrees_with_spectral(cubic_model):
    sc = Scenario(cubic_model, m=16, u0=[0.1], t_final=0.3, dt=2e-4, integrator="rk4",
                  sample_every=100)
    fd = fd_reference_solve(sc, 256)
    assert fd.status == "completed"
    assert spectral_vs_fd(integrate(sc), sc.basis(), fd) < 1e-5


def test_fd_resolution_guard(cubic_model):
    with pytest.raises(ValueError, match="8m"):
        fd_reference_solve(Scenario(cubic_model, m=32), 128)


def test_rows_flag_non_decrease():
    rows = _rows("m", [4, 8, 16, 32], [1e-2, 1e-3, 2e-3])
    assert [r.flagged for r in rows] == [False, False, True]
    assert rows[0].ratio is None and rows[1].ratio == pytest.approx(10.0)
    # differences at rounding level are not flagged
    assert not any(r.flagged for r in _rows("m", [4, 8, 16], [1e-15, 2e-15]))
    assert ConvergenceRow.FIELDS[0] == "kind"


def test_convergence_study_threads(monkeypatch, linear_model):
    sc = Scenario(linear_model, m=8, u0=[1.0], t_final=0.5, dt=1e-2, integrator="rk4",
                  sample_every=5)
    monkeypatch.setenv("NETFLOW_WAVES_THREADS", "1")
    one = convergence_study(sc, [2, 4], [1e-2, 5e-3, 2.5e-3])
    monkeypatch.setenv("NETFLOW_WAVES_THREADS", "3")
    three = convergence_study(sc, [2, 4], [1e-2, 5e-3, 2.5e-3])
    assert [r.difference for r in one] == [r.difference for r in three]
    assert [r.kind for r in one] == ["m", "dt", "dt"]
    assert 12 <= one[-1].ratio <= 20


def test_convergence_dt_must_divide(linear_model):
    sc = Scenario(linear_model, m=4, u0=[1.0], t_final=0.1, dt=1e-2)
    with pytest.raises(ValueError, match="divide"):
        convergence_study(sc, [], [1e-2, 3e-3])
