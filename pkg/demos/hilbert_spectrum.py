"""The Hilbert matrix is the moment matrix of Lebesgue measure on [0, 1].
Its truncations creep toward the operator norm pi very slowly."""
import math

from momentforge.measures import Lebesgue01
from momentforge.spectral import WeightScheme, nystrom_kernel_spectrum, truncated_spectrum

w = WeightScheme.unweighted()
print(" n      top eigenvalue   pi - top")
for n in (4, 16, 64, 256):
    top = truncated_spectrum(Lebesgue01(), w, n).top
    print(f"{n:4d}   {top:.10f}   {math.pi - top:.4f}")

# the same operator as the integral kernel 1/(1 - xy) on [0, 1]
for nodes in (32, 128):
    top = nystrom_kernel_spectrum(Lebesgue01(), w, quad_nodes=nodes).top
    print(f"kernel on {nodes} Gauss-Legendre nodes: {top:.6f}")
