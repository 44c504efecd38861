"""Numerical curvature engine for Riemannian and conformal submersions.

Modules: ``tensor_core`` (pointwise multilinear algebra), ``chart`` (chart
geometry and curvature), ``submersion`` (split frames and fundamental
tensors), ``identities`` (two-sided identity checks), ``integration`` and
``criteria`` (quadrature, divergence checks, rigidity criteria), ``models``
(built-in oracles) and ``cli``.
"""

__version__ = "0.1.0"
