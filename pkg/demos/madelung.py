"""Rock-salt energy per ion from several summation routes."""
import math

import chargelattice as cl

MADELUNG = 1.7475645946

lattice = cl.cubic(3)
phi = cl.alternating(lattice)
coulomb = cl.Riesz(1.0)

for report in (cl.energy_ewald(lattice, coulomb, phi),
               cl.energy_convergence_factor(lattice, coulomb, phi),
               cl.energy_epstein(lattice, 1.0, phi)):
    print(f"{report.route:>20}: {report.value:.12f}  (error bound {report.error:.1e})")
print(f"{'reference -M/2':>20}: {-MADELUNG / 2:.12f}")

for alpha in (1.0, math.sqrt(math.pi), 3.0):
    print(f"splitting {alpha:.3f}: {cl.energy_ewald(lattice, coulomb, phi, alpha=alpha).value:.15f}")
