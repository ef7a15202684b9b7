"""Consensus-constrained optimization on Riemannian manifolds with a
deterministic multi-robot semantic mapping and exploration simulator."""

from .manifolds import (
    Circle,
    CutLocusError,
    Euclidean,
    Manifold,
    MetricWeights,
    Pose,
    ProductManifold,
    SE3,
    loop_defect,
)

__all__ = [
    "Circle",
    "CutLocusError",
    "Euclidean",
    "Manifold",
    "MetricWeights",
    "Pose",
    "ProductManifold",
    "SE3",
    "loop_defect",
]

__version__ = "0.1.0"
