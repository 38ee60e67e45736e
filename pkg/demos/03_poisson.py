"""
Poisson problem on the hyperbolic ball
======================================

For boundary datum f the solution of -Delta_+ u - s(n - s) u = 0 with
s = n/2 + gamma is computed by a kernel integral and by a hypergeometric mode
series.  The two routes agree in the interior; near r = 1 only the series is
reliable.
"""

import warnings

import numpy as np

from gjmslab import PoissonSolution, SphereGeometry, ZonalFunction, scattering_apply
from gjmslab.scattering import NearBoundaryWarning, boundary_trend, pde_residual

geo = SphereGeometry(2)
f = ZonalFunction(geo, [1.0, 0.5, 0.2])
sol = PoissonSolution(geo, 1.3, f)

rs = np.array([0.2, 0.5, 0.8])
print("series  :", sol.eval_series(rs, 0.3))
print("integral:", sol.eval_integral(rs, 0.3))
print("PDE residual at (0.5, 0.3):", pde_residual(sol, 0.5, 0.3))

# rho_0^(s-n) u tends to the datum as r -> 1
print("trend towards f(0.3) =", f.evaluate(0.3).item(), ":", boundary_trend(sol, 0.3))

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    sol.eval_integral(0.995, 0.3)
print("near-boundary warning raised:", any(issubclass(w.category, NearBoundaryWarning) for w in caught))

# the scattering operator is a multiple of P_{2 gamma}
print("S f coefficients:", scattering_apply(f, 1.3).coeffs)
