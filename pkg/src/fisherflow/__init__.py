"""Riemannian flow matching for categorical data.

Categorical distributions live on the probability simplex; the square-root
map carries its Fisher-Rao geometry onto the positive orthant of the unit
sphere, where geodesics, exponential/log maps and parallel transport are all
closed-form. This package trains a tangent vector field by conditional flow
matching along those geodesics (optionally coupling minibatches by entropic
optimal transport), integrates the learned field from a uniform prior, and
decodes the endpoints back to discrete sequences.
"""

__version__ = "0.1.0"

from . import geometry

__all__ = ["geometry", "__version__"]
