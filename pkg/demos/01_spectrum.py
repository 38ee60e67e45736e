"""
Spectrum of the fractional GJMS operator on S^n
===============================================

Zonal functions are stored by their coefficients in C_l^mu (cos(l theta) on the
circle).  The operator P_{2 gamma} acts on mode l by the Gamma ratio
Gamma(l + n/2 + gamma) / Gamma(l + n/2 - gamma).
"""

import numpy as np

from gjmslab import SphereGeometry, ZonalFunction, apply_gjms, gjms_spectrum
from gjmslab.gjms import distance_power_eigenvalues, distance_power_eigenvalues_closed, inverse_kernel_apply

# the first few multipliers on S^2 for gamma = 0.7
geo = SphereGeometry(2)
spec = gjms_spectrum(geo, 0.7, 6)
print("multipliers, n=2 gamma=0.7:", np.round(spec.multipliers, 6))

# gamma = 1 on S^2 is the conformal Laplacian -Delta + n(n-2)/4 = l(l+1)
print("gamma=1 on S^2:", gjms_spectrum(geo, 1.0, 4).multipliers)

# the distance kernel |xi - eta|^(2 gamma - n) is diagonal too; its eigenvalues
# by quadrature agree with the Gamma closed form
quad = distance_power_eigenvalues(geo, 2 * 0.7 - 2, 10)
closed = distance_power_eigenvalues_closed(geo, 2 * 0.7 - 2, 10)
print("max rel. error of the kernel eigenvalues:", np.max(np.abs(quad / closed - 1)))

# after normalisation that kernel inverts P_{2 gamma}
f = ZonalFunction(geo, [1.0, 0.4, -0.2, 0.1])
back = inverse_kernel_apply(apply_gjms(f, 0.7), 0.7)
print("P^{-1} P f - f:", np.max(np.abs((back - f).coeffs)))
