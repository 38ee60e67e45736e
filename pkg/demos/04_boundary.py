"""
Boundary operators and the Dirichlet form
=========================================

Functions near the boundary of the ball are represented by two-branch jets in
the defining function rho.  Boundary operators read off normalised
coefficients; the Dirichlet form of a polyharmonic extension reduces to
zeta-weighted boundary energies, and a perturbation raises it quadratically.
"""

import numpy as np

from gjmslab import BoundaryData, SphereGeometry, boundary_coeffs, dirichlet_extend, dirichlet_form
from gjmslab.boundary import energy_identity_check, small_data, trace_deficit
from gjmslab.cli import format_coefficient_table
from gjmslab.inequalities import extremal_profile

gamma = 2.6
print(format_coefficient_table(boundary_coeffs(gamma)))

geo = SphereGeometry(2)
rng = np.random.default_rng(3)
data = BoundaryData.random(geo, gamma, 4, rng)
U = dirichlet_extend(data)

# the small-index operators recover the prescribed data
back = small_data(U)
print("recovery error:", max(np.max(np.abs((a - b).coeffs)) for a, b in
                             zip(back.integer + back.fractional, data.integer + data.fractional)))

Q = dirichlet_form(U, U)
print(f"Q(U,U) = {Q.value:.10f}, zeta form = {Q.zeta_form:.10f}")

for eps in (0.01, 0.02, 0.04):
    e = energy_identity_check(data, l=1, eps=eps)
    print(f"eps={eps}: Q - zeta form = {e.excess:.4e}")

# gamma = 1/2 on S^2 gives the sharp trace inequality
f = extremal_profile(0.4, 0.5, geo, L=48)
r = trace_deficit(BoundaryData(0.5, [f], []))
print(f"trace inequality at an extremal datum: rel. deficit {r.relative:+.1e}")
