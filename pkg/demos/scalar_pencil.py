"""
A one-state response pencil
===========================

With ``A = [[2]]`` and ``B = [[1]]`` the pencil has a single excitation at
``sqrt(3)`` and the polarizability is ``2 / (3 - w^2)``.  Every route through
the library should land on that closed form.
"""

import numpy as np

from absmor import (FrequencyGrid, DipoleBlock, adaptive_spectrum, build_pencil, dense_cpp_spectrum,
                    dense_structured_eig, lorentzian_spectrum, oscillator_table)

p = build_pencil([[2.0]], [[1.0]], check_spd=True)
d = DipoleBlock([[1.0, 0.0, 0.0]])
grid = FrequencyGrid(1.0, 2.0, 101, eta=0.1)

# closed form of omega * Im tr alpha(omega + i eta)
wt = grid.omegas + 1j * grid.eta
exact = grid.omegas * (2.0 / (3.0 - wt**2)).imag

eig = dense_structured_eig(p)
print("excitation energy:", eig.lambdas[0], "vs sqrt(3) =", np.sqrt(3.0))
print("oscillator weight:", oscillator_table(eig, d).weights[0])

model, mor = adaptive_spectrum(p, d, grid)
for name, sigma in [("reduced model", mor.sigma),
                    ("dense CPP", dense_cpp_spectrum(p, d, grid).sigma),
                    ("sum over states", lorentzian_spectrum(eig, d, grid).sigma)]:
    print(f"{name:16s} max |sigma - exact| = {np.max(np.abs(sigma - exact)):.2e}")

# one frequency is enough: the reduced basis has a single vector
print("frequencies used:", model.k, "basis order:", model.r)
