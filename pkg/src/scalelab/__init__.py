"""Verify homogeneous-scaling identities of density functionals on analytic densities."""

__version__ = "0.1.0"
