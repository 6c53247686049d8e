"""
Model order against damping and problem size
============================================

Smaller damping sharpens the peaks, so the adaptive loop needs more
interpolation frequencies.  Growing the problem at fixed spectral range
barely changes the number needed.
"""

from absmor import (FrequencyGrid, SolverConfig, SynthSpec, adaptive_spectrum, dense_structured_eig,
                    generate)

prob = generate(SynthSpec(n_occ=10, n_virt=50, seed=1))

# at small damping the unpreconditioned solves stall; the pencil is
# diagonally dominant, so a Jacobi preconditioner fixes that cheaply
cfg = SolverConfig(preconditioner="jacobi-diagonal", max_iterations=500)
for eta in (1.0, 0.5, 0.3, 0.1):
    grid = FrequencyGrid(10.0, 20.0, 1000, eta=eta)
    _, res = adaptive_spectrum(prob.pencil, prob.dipoles, grid, solver_cfg=cfg)
    print(f"eta = {eta:.1f}: k = {res.diagnostics['k']}")

grid = FrequencyGrid(10.0, 20.0, 1000, eta=1.0)
for n_occ in (5, 10, 20):
    prob = generate(SynthSpec(n_occ=n_occ, n_virt=50, seed=1))
    _, res = adaptive_spectrum(prob.pencil, prob.dipoles, grid)
    nlam = dense_structured_eig(prob.pencil).count_in_window(10.0, 20.0)
    print(f"n = {prob.pencil.n:4d}: excitations in window = {nlam:3d}, k = {res.diagnostics['k']}")
