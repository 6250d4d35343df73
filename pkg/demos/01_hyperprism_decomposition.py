"""
Splitting a prism over a simplex into simplices
===============================================

A d-simplex swept through a time interval is a (d+1)-dimensional prism.
Ordering the base vertices and connecting bottom copy i to top copy j only
for i <= j splits it into d+1 simplices of equal measure.
"""
import math

import numpy as np

from stmesh.extrusion import Hyperprism, decompose_hyperprism, prism_pattern
from stmesh.mesh import simplex_measure

# the pattern: which of the 2(d+1) prism vertices each piece uses
# (0..d are the bottom copies, d+1..2d+1 the top copies)
for d in (1, 2, 3):
    print(f"d = {d}:", prism_pattern(d).tolist())

# a random tetrahedron swept over [0.3, 1.1]
rng = np.random.default_rng(0)
base = rng.normal(size=(4, 3))
prism = Hyperprism(base, tau=0.8, t0=0.3)
pieces = decompose_hyperprism(prism)
print("\npieces:", pieces.shape)  # (4, 5, 4): four pentatopes in R^4

vols = [simplex_measure(p) for p in pieces]
print("piece measures:", np.round(vols, 6))
print("sum  ", sum(vols))
print("prism", simplex_measure(base) * 0.8)

# on the reference simplex each piece has measure tau / (d+1)!
ref = decompose_hyperprism(Hyperprism(np.vstack([np.zeros(3), np.eye(3)]), tau=1.0))
print("\nreference pieces:", [round(simplex_measure(p) * math.factorial(4), 12) for p in ref])
