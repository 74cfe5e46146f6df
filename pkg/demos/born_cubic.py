"""Search all period-2 charge patterns on the cubic lattice and compare with the predicted optimum."""
import chargelattice as cl

lattice = cl.cubic(3)
for s in (1.0, 3.0):
    report = cl.verify_born(lattice, cl.Riesz(s), 2, samples=200, seed=1)
    print(f"s={s}: match={report.match} k0={list(report.k0)} "
          f"energy={report.energy:.12f} brute force={report.brute_force_energy:.12f}")
