"""Unsteady incompressible Stokes flow with open dissipative
inlet/outlet conditions: Taylor-Hood saddle-point stepping, reduction to
an ODE system on a divergence-free basis, energy monitors, and a lumped
resistor-inertance network oracle."""

from .kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
