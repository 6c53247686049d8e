import json

import numpy as np
import pytest

from absmor.pencil import ComplexShift, DipoleBlock, assemble_h, assemble_s, build_pencil
from absmor.solver import (ShiftedSolveError, SingularShiftError, SolverConfig, solve_shifted_full,
                           solve_shifted_mk)

from conftest import random_problem, scalar_problem


def test_config_validation():
    for kw in ({"tol": 0}, {"tol": 1.0}, {"batch_size": 0}, {"max_iterations": 0},
               {"preconditioner": "ilu"}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
    c = SolverConfig()
    assert (c.tol, c.max_iterations, c.batch_size, c.preconditioner) == (1e-6, 200, 12, "none")


def test_scalar_mk_solve():
    p, d = scalar_problem()
    X, rep = solve_shifted_mk(p, d, [ComplexShift(0.0, 1.0)])
    assert X.shape == (1, 3)
    assert X[0, 0] == pytest.approx(0.25, abs=1e-15)
    assert rep.converged.all()
    # zero dipole columns need no iterations
    assert rep.iterations.tolist() == [1, 0, 0]


def test_identity_mk_solve():
    p = build_pencil(np.eye(5), np.zeros((5, 5)))
    e1 = np.zeros((5, 3))
    e1[0, 0] = 1
    tau = 0.3 + 0.2j
    X, _ = solve_shifted_mk(p, DipoleBlock(e1), [tau])
    np.testing.assert_allclose(X[:, 0], e1[:, 0] / (1 - tau**2), rtol=1e-14)


def test_mk_matches_dense_lu(prob32):
    p, d = prob32
    tau = 1.0 + 0.05j
    X, rep = solve_shifted_mk(p, d, [tau])
    ref = np.linalg.solve(p.M @ p.K - tau**2 * np.eye(32), d.d_tilde)
    assert np.linalg.norm(X - ref) / np.linalg.norm(ref) < 1e-6
    assert np.all(rep.residuals[rep.converged] <= 1e-6)


def test_scalar_full_solve():
    p = build_pencil([[2.0]], [[1.0]])
    d = DipoleBlock([[1.0, 0.0, 0.0]])
    X, rep = solve_shifted_full(p, d, [0.0])
    np.testing.assert_allclose(X[:, 0], [1 / 3, 1 / 3], rtol=1e-14)
    assert X.dtype == np.float64


def test_full_matches_dense_solve(prob16):
    p, d = prob16
    tau = 1.7 + 0.1j
    X, rep = solve_shifted_full(p, d, [tau], SolverConfig(tol=1e-10))
    ref = np.linalg.solve(assemble_h(p) - tau * assemble_s(16), d.stacked())
    assert np.linalg.norm(X - ref) / np.linalg.norm(ref) < 1e-8
    assert rep.converged.all()


def test_real_shift_at_eigenvalue_reports_failure():
    # H = [[2, 1], [1, 2]], S = diag(1, -1): eigenvalues of the pencil are +-sqrt(3)
    p = build_pencil([[2.0]], [[1.0]])
    d = DipoleBlock([[1.0, 0.0, 0.0]])
    X, rep = solve_shifted_full(p, d, [np.sqrt(3.0)])
    assert not rep.converged[0]
    with pytest.raises(ShiftedSolveError):
        rep.raise_on_failure()


def test_stagnation_detected_near_mk_pole():
    p, d = random_problem(40, 7)
    lam2 = np.sort(np.linalg.eigvals(p.M @ p.K).real)
    tau = np.sqrt(lam2[20]) * (1 + 1e-15)
    X, rep = solve_shifted_mk(p, d, [tau], SolverConfig(max_iterations=200))
    assert not rep.converged.any()
    assert rep.stagnated.any()
    with pytest.raises(SingularShiftError):
        rep.raise_on_failure()


def test_batch_size_invariance(prob32):
    p, d = prob32
    shifts = [ComplexShift(w, 0.1) for w in (1.0, 1.5, 2.0, 2.5)]
    cfg1 = SolverConfig(batch_size=1)
    cfg12 = SolverConfig(batch_size=12)
    X1, r1 = solve_shifted_mk(p, d, shifts, cfg1)
    X12, r12 = solve_shifted_mk(p, d, shifts, cfg12)
    assert np.max(np.abs(X1 - X12)) / np.max(np.abs(X12)) <= 10 * cfg1.tol
    assert r1.iterations.tolist() == r12.iterations.tolist()
    # fused products: width-12 batches need far fewer GEMMs
    assert r12.gemms < r1.gemms


def test_gemm_counts_deterministic(prob32):
    p, d = prob32
    shifts = [1.2 + 0.1j, 1.9 + 0.1j]
    counts = {solve_shifted_mk(p, d, shifts)[1].gemms for _ in range(3)}
    assert len(counts) == 1


def test_gemm_count_accounting(prob32):
    p, d = prob32
    _, rep = solve_shifted_mk(p, d, [1.5 + 0.1j], SolverConfig(batch_size=12))
    # one batch: 2 GEMMs per iteration plus 2 for the residual check
    assert rep.gemms == 2 * rep.iterations.max() + 2


def test_convergence_for_damped_shifts_on_spd(prob32):
    p, d = prob32
    shifts = [ComplexShift(w, 0.1) for w in np.linspace(0.5, 3.5, 7)]
    _, rep = solve_shifted_mk(p, d, shifts)
    assert rep.converged.all()
    assert np.all(rep.iterations < 200)


def test_jacobi_preconditioner_same_solution(prob32):
    p, d = prob32
    X0, r0 = solve_shifted_mk(p, d, [1.5 + 0.1j], SolverConfig(tol=1e-10))
    X1, r1 = solve_shifted_mk(p, d, [1.5 + 0.1j], SolverConfig(tol=1e-10, preconditioner="jacobi-diagonal"))
    np.testing.assert_allclose(X1, X0, rtol=1e-7, atol=1e-9)
    assert r1.iterations.max() < r0.iterations.max()
    Xf, rf = solve_shifted_full(p, d, [1.5 + 0.1j], SolverConfig(tol=1e-10, preconditioner="jacobi-diagonal"))
    assert rf.converged.all()


def test_real_path_and_report_json(prob16):
    p, d = prob16
    X, rep = solve_shifted_mk(p, d, [0.5, 0.6], SolverConfig(max_iterations=50))
    assert X.dtype == np.float64
    obj = json.loads(rep.to_json())
    assert set(obj) >= {"shifts", "iterations", "residuals", "gemms", "wall_seconds"}
    assert obj["shifts"] == [[0.5, 0.0], [0.6, 0.0]]
    assert len(obj["iterations"]) == 6


def test_rejects_empty_shifts(prob16):
    p, d = prob16
    with pytest.raises(ValueError):
        solve_shifted_mk(p, d, [])
