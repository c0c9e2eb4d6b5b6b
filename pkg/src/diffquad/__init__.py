"""Quadrature measures on spaces described by an orthonormal eigensystem.

Modules: ``spaces`` (model spaces and point clouds), ``kernels`` (localized,
heat and type-beta kernels), ``measures`` (point measures, regularity, mesh
statistics), ``operators`` (summability operators and smoothness norms),
``quadrature`` (exact and discrepancy-minimizing weights, verification) and
``cli`` (the ``diffquad`` command).
"""

from diffquad._backend import BACKEND

__version__ = "0.1.0"
