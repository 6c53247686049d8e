"""
Hermite interpolation and the two projections
=============================================

A model built from solutions at frequencies ``tau_j`` matches the
polarizability there and also its first derivative.  Projecting the full
2n-dimensional pencil or the n-dimensional ``MK`` form gives the same model.
"""

import numpy as np

from absmor import (FrequencyGrid, SolverConfig, SynthSpec, build_and_project_full, build_basis_mk,
                    eval_spectrum, generate, moment_match_check, project_mk, solve_shifted_full,
                    solve_shifted_mk)

prob = generate(SynthSpec(n_occ=5, n_virt=40, seed=42))
p, d = prob.pencil, prob.dipoles
shifts = [w + 1.0j for w in (11.0, 14.0, 17.0)]
cfg = SolverConfig(tol=1e-10, preconditioner="jacobi-diagonal")

X, _ = solve_shifted_mk(p, d, shifts, cfg)
mk = project_mk(p, d, build_basis_mk(p, X), shifts)
for s in shifts:
    v, dv = moment_match_check(p, d, mk, s, 1e-3)
    print(f"tau = {s}: value mismatch {v:.1e}, derivative mismatch {dv:.1e}")

# away from the interpolation frequencies the model is only approximate
v, dv = moment_match_check(p, d, mk, 12.5 + 1.0j, 1e-3)
print(f"tau = 12.5+1j (not interpolated): value mismatch {v:.1e}")

Xf, _ = solve_shifted_full(p, d, shifts, cfg)
full = build_and_project_full(p, d, Xf, shifts)
grid = FrequencyGrid(10.0, 20.0, 1000, eta=1.0)
a, b = eval_spectrum(mk, grid).sigma, eval_spectrum(full, grid).sigma
print(f"orders: mk r = {mk.r}, full r = {full.r}")
print(f"relative max difference of the two spectra: {np.max(np.abs(a - b)) / np.max(np.abs(a)):.1e}")
