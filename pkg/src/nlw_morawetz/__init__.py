"""Numerical laboratory for the radial energy-critical nonlinear wave equation.

    u_tt - Lap u + lam u |u|^(2*-2) = 0,   2* = 2n/(n-2)

Modules: ``radial_grid`` (meshes and quadrature), ``weights`` (multipliers),
``initial_data``, ``solver`` (velocity Verlet), ``free_wave`` (exact 3D
propagator and spherical-harmonic modes), ``functionals`` (energies and
space-time identities), ``experiments`` (named recipes) and ``cli``.
"""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .radial_grid import FieldState, RadialGrid, integrate_ball, make_grid  # noqa: E402

__all__ = ["BACKEND", "FieldState", "RadialGrid", "integrate_ball", "make_grid", "__version__"]
