"""Where does a shifted dual theta function take its minimum?"""
import numpy as np

import chargelattice as cl

for name, lattice in [("cubic", cl.cubic(3)), ("rectangle 1x2", cl.orthorhombic(1.0, 2.0)),
                      ("triangular (obtuse basis)", cl.triangular("obtuse"))]:
    result = cl.minimize_translated_theta(lattice)
    print(name)
    for alpha, points in result.per_alpha.items():
        print(f"  alpha={alpha:<6g} minimizers {np.round(points, 6).tolist()}")
