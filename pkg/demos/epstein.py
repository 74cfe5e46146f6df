"""Mode energies against the Epstein zeta function, including below the summability threshold."""
import math

import chargelattice as cl

lattice = cl.cubic(2)
for s in (1.0, 1.5, 2.0, 3.0):
    mode = cl.mode_energy_ewald(lattice, cl.Riesz(s), (1, 1), 2)
    zeta = cl.epstein_zeta(lattice, lattice.dual_generator @ [0.5, 0.5], s).real
    offset = 2 * math.pi ** (s / 2) / (s * math.gamma(s / 2))
    print(f"s={s}: mode {mode:.12f}  zeta + offset {zeta + offset:.12f}")
