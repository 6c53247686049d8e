"""Leveled midpoint refinement of the interpolation frequencies.

Level 1 places ``level1`` equispaced frequencies on the window (endpoints
included); level 2 adds every midpoint.  From then on the spectra of the last
two levels, each divided by its own maximum, are compared on every interval
between adjacent frequencies, and only intervals whose max-abs difference
exceeds ``tol`` receive their midpoint.  Solutions are never recomputed: each
level only solves at its new frequencies and extends the basis.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .pencil import ComplexShift
from .rom import build_and_project_full, build_basis_mk, eval_spectrum, project_mk
from .solver import SolverConfig, solve_shifted_full, solve_shifted_mk
from .spectrum import SpectrumResult, normalize

log = logging.getLogger(__name__)

ALGORITHMS = ("mk", "full")
SHIFT_MODES = ("complex", "real")


class AdaptiveError(RuntimeError):
    """No usable interpolation frequency: not a single shifted solve converged."""


@dataclass(frozen=True)
class PlanConfig:
    """Settings of the refinement loop.

    ``shift_mode="complex"`` interpolates at ``omega_j + i eta``;
    ``"real"`` at ``omega_j`` (real arithmetic solves).
    """

    level1: int = 5
    tol: float = 0.01
    max_order: int = 256
    algorithm: str = "mk"
    shift_mode: str = "complex"
    full_split: str = "structured"

    def __post_init__(self):
        if self.level1 < 2:
            raise ValueError("level1 needs at least 2 frequencies")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_order < self.level1:
            raise ValueError("max_order must be >= level1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.shift_mode not in SHIFT_MODES:
            raise ValueError(f"unknown shift mode {self.shift_mode!r}")


@dataclass
class Interval:
    lo: float
    hi: float
    error: float | None = None
    converged: bool = False


@dataclass
class InterpolationPlan:
    """Cumulative frequency sets per level and the live interval table."""

    tol: float
    max_order: int
    levels: list = field(default_factory=list)
    intervals: list = field(default_factory=list)
    level_errors: list = field(default_factory=list)
    failed: set = field(default_factory=set)

    @property
    def omegas(self):
        return self.levels[-1] if self.levels else []

    def add_level(self, new):
        merged = sorted(set(self.omegas) | set(new))
        self.levels.append(merged)
        return merged

    def refinable(self):
        return [iv for iv in self.intervals if not iv.converged]


def _assign(omegas, bounds):
    """Interval index per grid point; a shared endpoint goes to the left interval."""
    idx = np.searchsorted(np.asarray(bounds), omegas, side="left") - 1
    return np.clip(idx, 0, len(bounds) - 2)


class _Solved:
    """Accumulated shifted solutions and the current reduced model."""

    def __init__(self, p, d, grid, plan_cfg, solver_cfg):
        self.p, self.d, self.grid = p, d, grid
        self.cfg = plan_cfg
        self.scfg = solver_cfg
        self.columns = []
        self.shifts = []
        self.basis = None
        self.model = None
        self.reports = []

    def shift(self, omega):
        eta = self.grid.eta if self.cfg.shift_mode == "complex" else 0.0
        return ComplexShift(float(omega), eta)

    def solve(self, omegas):
        """Solve at ``omegas``; returns the frequencies whose solve failed."""
        if not len(omegas):
            return []
        shifts = [self.shift(w) for w in omegas]
        solve = solve_shifted_mk if self.cfg.algorithm == "mk" else solve_shifted_full
        X, rep = solve(self.p, self.d, shifts, self.scfg)
        self.reports.append(rep)
        ok = rep.shift_converged()
        failed = []
        new_cols = []
        for j, w in enumerate(omegas):
            if ok[j]:
                new_cols.append(X[:, 3 * j : 3 * j + 3])
                self.shifts.append(shifts[j].value)
            else:
                log.warning("shifted solve at omega=%g failed (stagnated=%s); shift skipped",
                            w, bool(rep.stagnated[3 * j : 3 * j + 3].any()))
                failed.append(w)
        if new_cols:
            block = np.hstack(new_cols)
            self.columns.append(block)
            self._rebuild(block)
        return failed

    def _rebuild(self, block):
        if self.cfg.algorithm == "mk":
            self.basis = build_basis_mk(self.p, block, previous=self.basis)
            self.model = project_mk(self.p, self.d, self.basis, self.shifts, previous=self.model)
        else:
            self.model = build_and_project_full(self.p, self.d, np.hstack(self.columns),
                                                self.shifts, split=self.cfg.full_split)

    def spectrum(self):
        return eval_spectrum(self.model, self.grid).sigma


def adaptive_spectrum(p, d, grid, plan_cfg=None, solver_cfg=None, keep_tensors=False):
    """Adaptive interpolatory reduced model of the spectrum on ``grid``.

    Returns
    -------
    model : ReducedModel
        The last (finest) model.
    result : SpectrumResult
        Its spectrum on ``grid``; ``diagnostics`` carries ``k`` (frequencies
        in the model), ``r`` (basis order), per-level frequency sets and
        interval errors, ``gemms``, ``wall_seconds`` and ``converged``.

    Raises
    ------
    AdaptiveError
        If no level-1 solve converges.
    """
    plan_cfg = plan_cfg or PlanConfig()
    solver_cfg = solver_cfg or SolverConfig()
    t0 = time.perf_counter()
    g0 = p.gemms.count
    om = grid.omegas

    plan = InterpolationPlan(plan_cfg.tol, plan_cfg.max_order)
    state = _Solved(p, d, grid, plan_cfg, solver_cfg)
    level_log = []

    first = np.linspace(grid.omega_min, grid.omega_max, plan_cfg.level1)
    bounds = plan.add_level(first.tolist())
    plan.failed.update(state.solve(bounds))
    if state.model is None:
        raise AdaptiveError("no level-1 shifted solve converged")
    plan.intervals = [Interval(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    level_log.append({"shifts": list(bounds), "added": list(bounds), "interval_errors": []})
    prev = normalize(state.spectrum())

    # an interval this narrow holds at most one grid point
    min_width = grid.width / (grid.N - 1)
    converged = False
    stop_reason = None
    while True:
        todo = [iv for iv in plan.refinable()
                if iv.hi - iv.lo > min_width
                and (iv.error is None or iv.error > plan.tol
                     or iv.lo in plan.failed or iv.hi in plan.failed)]
        if not todo:
            converged = True
            break
        mids = [0.5 * (iv.lo + iv.hi) for iv in todo]
        if len(plan.omegas) + len(mids) > plan.max_order:
            stop_reason = "max_order"
            break
        bounds = plan.add_level(mids)
        plan.failed.update(state.solve(mids))

        refine = {id(iv) for iv in todo}
        children = []
        for iv in plan.intervals:
            if id(iv) in refine:
                m = 0.5 * (iv.lo + iv.hi)
                children += [Interval(iv.lo, m), Interval(m, iv.hi)]
            else:
                children.append(iv)
        plan.intervals = children

        cur = normalize(state.spectrum())
        diff = np.abs(cur - prev)
        which = _assign(om, bounds)
        errs = []
        for i, iv in enumerate(plan.intervals):
            if iv.converged:
                continue
            sel = which == i
            iv.error = float(diff[sel].max()) if sel.any() else 0.0
            ok_ends = iv.lo not in plan.failed and iv.hi not in plan.failed
            iv.converged = iv.error <= plan.tol and ok_ends
            errs.append({"lo": iv.lo, "hi": iv.hi, "error": iv.error})
        plan.level_errors.append(errs)
        level_log.append({"shifts": list(bounds), "added": mids, "interval_errors": errs})
        prev = cur
        log.info("level %d: %d frequencies, max interval error %.3g",
                 len(plan.levels), len(bounds), max(e["error"] for e in errs) if errs else 0.0)

    model = state.model
    res = eval_spectrum(model, grid, keep_tensors=keep_tensors)
    res.diagnostics = {
        "k": model.k,
        "r": model.r,
        "n_attempted": len(plan.omegas),
        "failed_shifts": sorted(plan.failed),
        "levels": level_log,
        "gemms": int(p.gemms.count - g0),
        "solver_iterations_max": int(max(r.iterations.max() for r in state.reports)),
        "wall_seconds": time.perf_counter() - t0,
        "converged": bool(converged and not plan.failed),
        "stop_reason": stop_reason or ("failed_shifts" if plan.failed else "converged"),
        "algorithm": plan_cfg.algorithm,
        "shift_mode": plan_cfg.shift_mode,
        "eta": grid.eta,
        "tol": plan_cfg.tol,
    }
    return model, res


def uniform_spectrum(p, d, grid, k, plan_cfg=None, solver_cfg=None, keep_tensors=False):
    """Reduced model from ``k`` equispaced frequencies on the window (no refinement)."""
    plan_cfg = plan_cfg or PlanConfig()
    t0 = time.perf_counter()
    g0 = p.gemms.count
    state = _Solved(p, d, grid, plan_cfg, solver_cfg or SolverConfig())
    omegas = np.linspace(grid.omega_min, grid.omega_max, k).tolist() if k > 1 else [0.5 * (grid.omega_min + grid.omega_max)]
    failed = state.solve(omegas)
    if state.model is None:
        raise AdaptiveError("no shifted solve converged")
    model = state.model
    res = eval_spectrum(model, grid, keep_tensors=keep_tensors)
    res.diagnostics = {
        "k": model.k,
        "r": model.r,
        "n_attempted": len(omegas),
        "failed_shifts": failed,
        "levels": [{"shifts": omegas, "added": omegas, "interval_errors": []}],
        "gemms": int(p.gemms.count - g0),
        "solver_iterations_max": int(state.reports[0].iterations.max()),
        "wall_seconds": time.perf_counter() - t0,
        "converged": not failed,
        "stop_reason": "fixed-k",
        "algorithm": plan_cfg.algorithm,
        "shift_mode": plan_cfg.shift_mode,
        "eta": grid.eta,
    }
    return model, res
