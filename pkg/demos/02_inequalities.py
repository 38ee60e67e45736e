"""
Sharp inequalities and their deficits
=====================================

Every evaluator returns a DeficitReport holding both sides of one inequality.
Conformal images of the constant function are extremal, so their deficit
vanishes up to round-off; generic positive inputs give a positive deficit.
"""

import numpy as np

from gjmslab import (
    SphereGeometry,
    ZonalFunction,
    beckner_deficit,
    counterexample_search,
    extremal_profile,
    random_positive,
    sobolev_deficit,
    stability_bound,
)

rng = np.random.default_rng(1)

# Sobolev (gamma < n/2) and reverse Sobolev (n/2 < gamma < n/2 + 2) on S^3
geo = SphereGeometry(3)
for gamma in (0.8, 2.2):
    ext = sobolev_deficit(extremal_profile(0.5, gamma, geo, L=48), gamma)
    rnd = sobolev_deficit(random_positive(geo, 6, rng), gamma)
    print(f"{ext.name:16s} gamma={gamma}: extremal rel. deficit {ext.relative:+.1e}, random {rnd.relative:+.3f}")

# gamma = n/2 is the Beckner (Onofri) log inequality; a small perturbation of
# zero gives a deficit of fourth order in its size
circle = SphereGeometry(1)
for eps in (0.2, 0.1, 0.05):
    print(f"Beckner deficit for eps*cos(theta), eps={eps}: {beckner_deficit(ZonalFunction(circle, [0.0, eps])).deficit:.3e}")

# stability in the reverse range: the deficit controls the distance to the
# extremal manifold after centre-of-mass normalisation
rep = stability_bound(ZonalFunction(circle, [1.0, 0.0, 0.1]), 1.8)
print(f"stability n=1 gamma=1.8: deficit {rep.deficit:.4f} >= lower bound {rep.lower_bound:.4f}")

# beyond n/2 + 2 the reverse inequality fails; a short search finds a witness
ce = counterexample_search(2.7, circle, budget=200, seed=0)
print(f"counterexample n=1 gamma=2.7: deficit {ce.deficit:.4f}, at doubled grid {ce.refinement[1]:.4f}")
