"""Period-3 optimum on the triangular lattice: a honeycomb of charge."""
import numpy as np

import chargelattice as cl

lattice = cl.triangular("obtuse")
coulomb = cl.Riesz(1.0)
report = cl.verify_born(lattice, coulomb, 3, samples=100)
print("match:", report.match, "degeneracy:", report.degeneracy, "k0:", list(report.k0))
print("distinct charges:", np.unique(np.round(report.configuration.values, 10)))

phi = cl.honeycomb_triangular(lattice)
print("energy per site:", cl.energy_ewald(lattice, coulomb, phi).value)
