"""Desk-scale laboratory for the energy balance of periodic incompressible flow.

Exact rational exponent calculus for integrability criteria, a
pseudo-spectral solver with exact viscous integration, Friederichs time
mollification, and energy-budget diagnostics, all deterministic.
"""

__version__ = "0.1.0"
