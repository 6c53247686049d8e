"""Batched GMRES for blocks of shifted linear systems.

Every right-hand-side column (one dipole component at one shift) runs its own
unrestarted GMRES recurrence.  Only the operator applications are fused: the
current Arnoldi vectors of up to ``batch_size`` columns are stacked and pushed
through the pencil as one matrix-matrix product.  Columns are processed in
consecutive batches; inside a batch, columns that converge or stagnate are
frozen and dropped from later products.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .pencil import ComplexShift, apply_full_shifted, apply_mk

PRECONDITIONERS = ("none", "jacobi-diagonal")


class ShiftedSolveError(RuntimeError):
    """Raised by :meth:`SolveReport.raise_on_failure` for unconverged columns."""


class SingularShiftError(ShiftedSolveError):
    """A column stagnated, which signals a shift at (or next to) a pole."""


@dataclass(frozen=True)
class SolverConfig:
    """GMRES settings shared by all columns of a solve.

    ``tol`` is the relative residual target and ``max_iterations`` the Krylov
    dimension cap (there are no restarts).  Stagnation is declared when the
    residual improves by less than ``stagnation_improvement`` (relative) over
    ``stagnation_window`` consecutive iterations.
    """

    tol: float = 1e-6
    max_iterations: int = 200
    batch_size: int = 12
    preconditioner: str = "none"
    stagnation_window: int = 25
    stagnation_improvement: float = 1e-3

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveReport:
    """Per-column diagnostics of one batched solve.

    Column ``3*j + i`` belongs to shift ``j`` and dipole component ``i``.
    ``residuals`` are explicit relative residuals evaluated after the solve.
    """

    shifts: list
    iterations: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    stagnated: np.ndarray
    gemms: int
    wall_seconds: float
    tol: float = 1e-6
    columns_per_shift: int = 3

    def shift_converged(self):
        """Boolean per shift: every one of its columns converged."""
        return self.converged.reshape(-1, self.columns_per_shift).all(axis=1)

    def raise_on_failure(self):
        bad = np.flatnonzero(~self.converged)
        if bad.size == 0:
            return
        stag = np.flatnonzero(self.stagnated)
        msg = (f"{bad.size} of {self.converged.size} columns did not reach "
               f"tol={self.tol:g}: columns {bad.tolist()}")
        if stag.size:
            raise SingularShiftError(msg + f" (stagnated: {stag.tolist()})")
        raise ShiftedSolveError(msg)

    def to_dict(self):
        return {
            "shifts": [[complex(s).real, complex(s).imag] for s in self.shifts],
            "iterations": self.iterations.tolist(),
            "residuals": self.residuals.tolist(),
            "converged": self.converged.tolist(),
            "stagnated": self.stagnated.tolist(),
            "gemms": int(self.gemms),
            "wall_seconds": float(self.wall_seconds),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def as_shift_values(shifts):
    """Complex values of a sequence of shifts (``ComplexShift`` or numbers)."""
    out = []
    for s in shifts:
        out.append(s.value if isinstance(s, ComplexShift) else complex(s))
    if not out:
        raise ValueError("at least one shift is required")
    return np.array(out, dtype=np.complex128)


def _givens(a, b):
    """Vectorized complex Givens rotation zeroing ``b`` against ``a``."""
    absa = np.abs(a)
    t = np.hypot(absa, np.abs(b))
    c = np.zeros_like(absa)
    phase = np.ones_like(a)
    ok = absa > 0
    phase[ok] = a[ok] / absa[ok]
    nz = t > 0
    c[nz] = absa[nz] / t[nz]
    c[~nz] = 1.0
    s = np.zeros_like(a)
    s[nz] = phase[nz] * np.conj(b[nz]) / t[nz]
    return c, s


def _gmres_batch(op, B, cols, pinv, cfg, dtype):
    """Run synchronized GMRES on the columns ``cols`` of ``B``.

    ``op(Z, cols)`` applies the shifted operator column-wise to the block
    ``Z``; ``pinv`` holds per-column inverse diagonal preconditioners (or
    None).  Returns ``(X, iterations, stagnated)`` for those columns.
    """
    N = B.shape[0]
    m = len(cols)
    maxit = cfg.max_iterations
    V = np.zeros((m, maxit + 1, N), dtype=dtype)
    H = np.zeros((m, maxit + 1, maxit), dtype=dtype)
    cs = np.zeros((m, maxit))
    sn = np.zeros((m, maxit), dtype=dtype)
    g = np.zeros((m, maxit + 1), dtype=dtype)
    res_hist = np.zeros((m, maxit + 1))

    b = B[:, cols].T.astype(dtype)
    bnorm = np.linalg.norm(b, axis=1)
    X = np.zeros((N, m), dtype=dtype)
    iters = np.zeros(m, dtype=int)
    stagnated = np.zeros(m, dtype=bool)

    active = bnorm > 0
    V[active, 0] = b[active] / bnorm[active, None]
    g[:, 0] = bnorm
    res_hist[:, 0] = 1.0
    done_at = np.full(m, -1)

    win = cfg.stagnation_window
    for j in range(maxit):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        Z = V[act, j].T
        if pinv is not None:
            Z = Z * pinv[:, act]
        W = op(np.ascontiguousarray(Z), cols[act]).T  # (a, N)
        Vj = V[act, : j + 1]
        h = np.einsum("akn,an->ak", Vj.conj(), W)
        W = W - np.einsum("akn,ak->an", Vj, h)
        h2 = np.einsum("akn,an->ak", Vj.conj(), W)
        W = W - np.einsum("akn,ak->an", Vj, h2)
        h = h + h2
        beta = np.linalg.norm(W, axis=1)
        safe = beta > 0
        Vn = np.zeros_like(W)
        Vn[safe] = W[safe] / beta[safe, None]
        V[act, j + 1] = Vn

        col = np.zeros((act.size, j + 2), dtype=dtype)
        col[:, : j + 1] = h
        col[:, j + 1] = beta
        for i in range(j):
            c = cs[act, i]
            s = sn[act, i]
            x, y = col[:, i].copy(), col[:, i + 1].copy()
            col[:, i] = c * x + s * y
            col[:, i + 1] = -np.conj(s) * x + c * y
        c, s = _givens(col[:, j], col[:, j + 1])
        cs[act, j] = c
        sn[act, j] = s
        col[:, j] = c * col[:, j] + s * col[:, j + 1]
        col[:, j + 1] = 0
        H[act, : j + 2, j] = col
        gj = g[act, j]
        g[act, j + 1] = -np.conj(s) * gj
        g[act, j] = c * gj

        rel = np.abs(g[act, j + 1]) / bnorm[act]
        res_hist[act, j + 1] = rel
        iters[act] = j + 1

        finished = (rel <= cfg.tol) | ~safe
        # breakdown or an exhausted Krylov space: no further progress possible
        dead = (~safe | (j + 1 >= N)) & (rel > cfg.tol)
        stagnated[act[dead]] = True
        finished |= dead
        if j + 1 > win:
            old = res_hist[act, j + 1 - win]
            stag = (old - rel) < cfg.stagnation_improvement * old
            stag &= ~finished
            stagnated[act[stag]] = True
            finished |= stag
        if j + 1 == maxit:
            finished[:] = True
        for a in act[finished]:
            active[a] = False
            done_at[a] = j + 1

    for a in range(m):
        k = done_at[a]
        if k <= 0:
            continue
        R = H[a, :k, :k]
        y = _upper_solve(R, g[a, :k])
        x = V[a, :k].T @ y
        if pinv is not None:
            x = x * pinv[:, a]
        X[:, a] = x
    return X, iters, stagnated


def _upper_solve(R, y):
    return scipy.linalg.solve_triangular(R, y, lower=False, check_finite=False)


def _run(op, B, real, cfg, pdiag, counter):
    """Solve all columns of ``B`` batch by batch and check residuals."""
    t0 = time.perf_counter()
    g0 = counter.count
    dtype = np.float64 if real else np.complex128
    N, ncol = B.shape
    pinv = None
    if pdiag is not None:
        pdiag = pdiag.real.astype(dtype) if real else pdiag.astype(dtype)
        with np.errstate(divide="ignore"):
            pinv = np.where(pdiag != 0, 1.0 / np.where(pdiag != 0, pdiag, 1), 1.0)

    X = np.zeros((N, ncol), dtype=dtype)
    iters = np.zeros(ncol, dtype=int)
    stag = np.zeros(ncol, dtype=bool)
    bs = cfg.batch_size
    for start in range(0, ncol, bs):
        cols = np.arange(start, min(start + bs, ncol))
        Xb, it, st = _gmres_batch(op, B, cols, None if pinv is None else pinv[:, cols], cfg, dtype)
        X[:, cols] = Xb
        iters[cols] = it
        stag[cols] = st

    # one explicit residual evaluation per column, fused in batches as well
    res = np.zeros(ncol)
    for start in range(0, ncol, bs):
        cols = np.arange(start, min(start + bs, ncol))
        R = B[:, cols] - op(np.ascontiguousarray(X[:, cols]), cols)
        bn = np.linalg.norm(B[:, cols], axis=0)
        rn = np.linalg.norm(R, axis=0)
        res[cols] = np.where(bn > 0, rn / np.where(bn > 0, bn, 1), 0.0)
    converged = res <= cfg.tol
    # the recurrence claims convergence but the true residual disagrees:
    # the shifted operator is numerically singular
    stag |= ~converged & (iters >= min(N, cfg.max_iterations)) & (iters < cfg.max_iterations)
    stag |= ~converged & (res > 1e3 * cfg.tol) & (iters < cfg.max_iterations)
    return X, iters, res, converged, stag, counter.count - g0, time.perf_counter() - t0


def solve_shifted_mk(p, d, shifts, cfg=None):
    """Solve ``(MK - tau^2 I) x = d_i`` for every shift and dipole column.

    Parameters
    ----------
    p : ResponsePencil
    d : DipoleBlock
    shifts : sequence of ComplexShift or complex
    cfg : SolverConfig, optional

    Returns
    -------
    X : ndarray, shape (n, 3*k)
        Column ``3*j + i`` solves shift ``j`` against dipole ``i``.  Real
        dtype when every shift is real.
    report : SolveReport
    """
    cfg = cfg or SolverConfig()
    taus = as_shift_values(shifts)
    if d.n != p.n:
        raise ValueError(f"dipole block has {d.n} rows, pencil has n={p.n}")
    ncomp = d.d_tilde.shape[1]
    tau2 = np.repeat(taus**2, ncomp)
    B = np.tile(d.d_tilde, len(taus))
    real = np.all(taus.imag == 0)
    if real:
        tau2 = tau2.real

    def op(Z, cols):
        return apply_mk(p, Z) - Z * tau2[cols]

    pdiag = None
    if cfg.preconditioner == "jacobi-diagonal":
        base = np.diag(p.M) * np.diag(p.K)
        pdiag = base[:, None] - tau2[None, :]
    X, it, res, conv, stag, gemms, wall = _run(op, B, real, cfg, pdiag, p.gemms)
    report = SolveReport(list(taus), it, res, conv, stag, gemms, wall, cfg.tol, ncomp)
    return X, report


def solve_shifted_full(p, d, shifts, cfg=None):
    """Solve ``(H - tau S) x = [d_i; d_i]`` for every shift and dipole column.

    Same layout and diagnostics as :func:`solve_shifted_mk`, with
    solutions of height ``2n``.
    """
    cfg = cfg or SolverConfig()
    taus = as_shift_values(shifts)
    if d.n != p.n:
        raise ValueError(f"dipole block has {d.n} rows, pencil has n={p.n}")
    ncomp = d.d_tilde.shape[1]
    tau = np.repeat(taus, ncomp)
    B = np.tile(d.stacked(), len(taus))
    real = np.all(taus.imag == 0)
    if real:
        tau = tau.real

    def op(Z, cols):
        return apply_full_shifted(p, tau[cols], Z)

    pdiag = None
    if cfg.preconditioner == "jacobi-diagonal":
        a = np.diag(p.A)[:, None]
        pdiag = np.vstack([a - tau[None, :], a + tau[None, :]])
    X, it, res, conv, stag, gemms, wall = _run(op, B, real, cfg, pdiag, p.gemms)
    report = SolveReport(list(taus), it, res, conv, stag, gemms, wall, cfg.tol, ncomp)
    return X, report
