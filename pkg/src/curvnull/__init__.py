"""Curvature, kappa-nullity and holonomy computations for deformed
homogeneous metrics, with three mutually independent computation paths:

* path A -- closed-form tables for vertically warped metrics (warp module),
* path B -- generic orthonormal-frame curvature engine driven by exact
  chart jets (frames module),
* path C -- finite-difference oracle working only from chart metric
  components (oracle module).
"""

__version__ = "0.1.0"
