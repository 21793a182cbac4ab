"""Two-microlocal semiclassical laboratory on the flat torus T^2.

Submodules
----------
lattice     primitive rank-1 sublattices of Z^2 and the Hamiltonians H_L, H_L^perp
potential   trigonometric-polynomial potentials, geodesic averages, critical geodesics
weyl        Weyl quantization in the Fourier basis and its exact identities
quantum     states, the Hamiltonian, propagators, eigenpairs, oscillation diagnostics
wigner      Wigner / two-microlocal observables, densities and tube masses
classical   pendulum flow of p_L, moment map, Liouville tori, caustics
experiments finite-hbar experiment harness and the ``lab`` CLI
"""

__version__ = "0.1.0"
