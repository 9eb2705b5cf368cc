"""Finite-precision computer algebra for overconvergent p-adic series rings,
their connections, and explicit cohomology on affine space."""

__version__ = "0.1.0"
