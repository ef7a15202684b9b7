"""Riemannian manifold abstraction: Euclidean space, the unit circle, SE(3)
and products, with exponential/logarithm maps, weighted squared distances,
parallel transport and the geodesic-loop defect diagnostic.

Points are immutable values: numpy arrays for Euclidean/circle states, `Pose`
objects for SE(3), tuples for products. Tangent vectors are numpy arrays
(ambient 2-vectors orthogonal to the base point on the circle, body-frame
twists ``[rho, theta]`` on SE(3)). All operations are pure functions of their
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import se3
from .se3 import CutLocusError

__all__ = [
    "CutLocusError",
    "MetricWeights",
    "Pose",
    "Manifold",
    "Euclidean",
    "Circle",
    "SE3",
    "ProductManifold",
    "circle_point",
    "loop_defect",
    "estimate_loop_ratio",
]

_ROT_TOL = 1e-9


@dataclass(frozen=True)
class MetricWeights:
    """Diagonal weights for the SE(3) metric, translation entries first."""

    gamma: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (6,):
            raise ValueError(f"metric weights must have shape (6,), got {g.shape}")
        if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
            raise ValueError("metric weights must be positive and finite")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @classmethod
    def identity(cls) -> "MetricWeights":
        return cls(np.ones(6))

    @classmethod
    def default(cls) -> "MetricWeights":
        """Unit translation weights, 0.1 on the angular block."""
        return cls(np.array([1.0, 1.0, 1.0, 0.1, 0.1, 0.1]))


@dataclass(frozen=True)
class Pose:
    """Rigid-body pose: orthonormal rotation (det +1) plus translation in m."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        rot = np.asarray(self.rotation, dtype=float)
        trans = np.asarray(self.translation, dtype=float)
        if rot.shape != (3, 3) or trans.shape != (3,):
            raise ValueError("pose needs a 3x3 rotation and a 3-vector translation")
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(trans))):
            raise ValueError("pose entries must be finite")
        if np.linalg.norm(rot.T @ rot - np.eye(3)) > _ROT_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(rot) - 1.0) > _ROT_TOL:
            raise ValueError("rotation determinant differs from +1 by more than 1e-9")
        rot = rot.copy()
        trans = trans.copy()
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_xy_yaw(cls, x: float, y: float, yaw: float, z: float = 0.0) -> "Pose":
        return cls(se3.so3_exp(np.array([0.0, 0.0, yaw])), np.array([x, y, z]))

    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def yaw(self) -> float:
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))


class Manifold:
    """Common interface; `dist2` defaults to the metric norm of the log."""

    # Loop-defect ratio rho of the curvature bound; 0 on flat manifolds and
    # None where it is only known empirically.
    loop_ratio: float | None = 0.0

    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def inner(self, x, u, v) -> float:
        raise NotImplementedError

    def zero_tangent(self, x):
        raise NotImplementedError

    def transport(self, x, y, v):
        """Parallel transport of tangent v from x to y along the geodesic."""
        raise NotImplementedError

    def tangent_basis(self, x) -> list:
        """Orthonormal tangent basis at x (with respect to this metric)."""
        raise NotImplementedError

    def check_point(self, x) -> None:
        raise NotImplementedError

    def norm(self, x, v) -> float:
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    def dist2(self, x, y) -> float:
        v = self.log(x, y)
        return float(self.inner(x, v, v))

    def random_point(self, rng: np.random.Generator):
        raise NotImplementedError

    def random_tangent(self, rng: np.random.Generator, x, scale: float = 1.0):
        raise NotImplementedError


class Euclidean(Manifold):
    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim

    def check_point(self, x) -> None:
        x = np.asarray(x)
        if x.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point entries must be finite")

    def exp(self, x, v):
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        if v.shape != x.shape:
            raise ValueError("tangent dimension mismatch")
        return x + v

    def log(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def inner(self, x, u, v) -> float:
        return float(np.dot(u, v))

    def zero_tangent(self, x):
        return np.zeros(self.dim)

    def transport(self, x, y, v):
        return np.asarray(v, dtype=float)

    def tangent_basis(self, x) -> list:
        return [e for e in np.eye(self.dim)]

    def random_point(self, rng: np.random.Generator):
        return rng.normal(size=self.dim)

    def random_tangent(self, rng, x, scale: float = 1.0):
        return scale * rng.normal(size=self.dim)


def circle_point(angle: float) -> np.ndarray:
    return np.array([np.cos(angle), np.sin(angle)])


def _perp(x: np.ndarray) -> np.ndarray:
    return np.array([-x[1], x[0]])


class Circle(Manifold):
    """Unit circle embedded in R^2; tangents are ambient vectors orthogonal
    to the base point, so `exp` is the cosine/sine geodesic formula."""

    def check_point(self, x) -> None:
        x = np.asarray(x)
        if x.shape != (2,):
            raise ValueError(f"circle points are 2-vectors, got shape {x.shape}")
        if abs(np.linalg.norm(x) - 1.0) > 1e-12:
            raise ValueError("circle point must have unit norm within 1e-12")

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if v.shape != (2,):
            raise ValueError("tangent dimension mismatch")
        if abs(float(np.dot(x, v))) > 1e-9 * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("tangent must be orthogonal to the base point")
        t = float(np.linalg.norm(v))
        if t == 0.0:
            return x.copy()
        y = np.cos(t) * x + np.sin(t) * (v / t)
        return y / np.linalg.norm(y)

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = float(np.dot(x, y))
        s = float(x[0] * y[1] - x[1] * y[0])
        theta = np.arctan2(s, c)
        if abs(theta) >= np.pi - 1e-9:
            raise CutLocusError("log undefined for (near-)antipodal circle points")
        return theta * _perp(x)

    def inner(self, x, u, v) -> float:
        return float(np.dot(u, v))

    def zero_tangent(self, x):
        return np.zeros(2)

    def transport(self, x, y, v):
        # 1-D tangent spaces: carry the signed coefficient in the perp frame.
        return float(np.dot(v, _perp(np.asarray(x, dtype=float)))) * _perp(
            np.asarray(y, dtype=float)
        )

    def tangent_basis(self, x) -> list:
        return [_perp(np.asarray(x, dtype=float))]

    def random_point(self, rng: np.random.Generator):
        return circle_point(rng.uniform(-np.pi, np.pi))

    def random_tangent(self, rng, x, scale: float = 1.0):
        return scale * rng.normal() * _perp(np.asarray(x, dtype=float))


class SE3(Manifold):
    """SE(3) with right (body-frame) perturbations and a diagonal metric.

    ``dist2(X, Y) = xi^T diag(gamma) xi`` with ``xi = log(X^-1 Y)^vee``. The
    parallel transport is the left-translation transport: body-frame twist
    coordinates are carried unchanged between tangent spaces.
    """

    loop_ratio: float | None = None  # curvature ratio only known empirically

    def __init__(self, weights: MetricWeights | None = None):
        self.weights = weights if weights is not None else MetricWeights.identity()

    def check_point(self, x) -> None:
        if not isinstance(x, Pose):
            raise ValueError("SE(3) points must be Pose instances")

    def exp(self, x: Pose, v: np.ndarray) -> Pose:
        v = np.asarray(v, dtype=float)
        if v.shape != (6,):
            raise ValueError("SE(3) tangents are 6-vectors")
        rot_d, trans_d = se3.se3_exp(v)
        rot = se3.polar_project(x.rotation @ rot_d)
        return Pose(rot, x.rotation @ trans_d + x.translation)

    def log(self, x: Pose, y: Pose) -> np.ndarray:
        rt = x.rotation.T
        return se3.se3_log(rt @ y.rotation, rt @ (y.translation - x.translation))

    def inner(self, x, u, v) -> float:
        return float(np.dot(u * self.weights.gamma, v))

    def zero_tangent(self, x):
        return np.zeros(6)

    def transport(self, x, y, v):
        return np.asarray(v, dtype=float)

    def tangent_basis(self, x) -> list:
        return [e / np.sqrt(g) for e, g in zip(np.eye(6), self.weights.gamma)]

    def random_point(self, rng: np.random.Generator, trans_scale: float = 1.0):
        return self.random_pose(rng, trans_scale)

    def random_pose(
        self, rng: np.random.Generator, trans_scale: float = 1.0, max_angle: float = np.pi - 0.1
    ) -> Pose:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(0.0, max_angle)
        return Pose(se3.so3_exp(angle * axis), trans_scale * rng.normal(size=3))

    def random_tangent(self, rng, x, scale: float = 1.0):
        return scale * rng.normal(size=6)


class ProductManifold(Manifold):
    """Product of factor manifolds; points and tangents are tuples and
    dist2 sums over factors."""

    def __init__(self, factors: list[Manifold]):
        if not factors:
            raise ValueError("product needs at least one factor")
        self.factors = list(factors)
        ratios = [f.loop_ratio for f in self.factors]
        self.loop_ratio = None if any(r is None for r in ratios) else max(ratios)

    def check_point(self, x) -> None:
        if len(x) != len(self.factors):
            raise ValueError("component count mismatch")
        for f, xi in zip(self.factors, x):
            f.check_point(xi)

    def exp(self, x, v):
        return tuple(f.exp(xi, vi) for f, xi, vi in zip(self.factors, x, v))

    def log(self, x, y):
        return tuple(f.log(xi, yi) for f, xi, yi in zip(self.factors, x, y))

    def inner(self, x, u, v) -> float:
        return float(
            sum(f.inner(xi, ui, vi) for f, xi, ui, vi in zip(self.factors, x, u, v))
        )

    def zero_tangent(self, x):
        return tuple(f.zero_tangent(xi) for f, xi in zip(self.factors, x))

    def transport(self, x, y, v):
        return tuple(
            f.transport(xi, yi, vi) for f, xi, yi, vi in zip(self.factors, x, y, v)
        )

    def tangent_basis(self, x) -> list:
        basis = []
        for i, (f, xi) in enumerate(zip(self.factors, x)):
            for b in f.tangent_basis(xi):
                vec = [g.zero_tangent(xj) for g, xj in zip(self.factors, x)]
                vec[i] = b
                basis.append(tuple(vec))
        return basis

    def random_point(self, rng: np.random.Generator):
        return tuple(f.random_point(rng) for f in self.factors)

    def random_tangent(self, rng, x, scale: float = 1.0):
        return tuple(
            f.random_tangent(rng, xi, scale) for f, xi in zip(self.factors, x)
        )


def loop_defect(manifold: Manifold, x_i, x_j, y_j, y_i):
    """Net tangent vector of the geodesic loop x_i -> x_j -> y_j -> y_i -> x_i,
    expressed at x_i. Identically zero on flat manifolds; its bounded ratio
    against the opposite-side lengths is the curvature constant used for the
    consensus step-size range."""
    v_x_ij = manifold.log(x_i, x_j)
    v_xy_i = manifold.log(x_i, y_i)
    v_xy_j = manifold.log(x_j, y_j)
    v_y_ij = manifold.log(y_i, y_j)
    carried_j = manifold.transport(x_j, x_i, v_xy_j)
    carried_y = manifold.transport(y_i, x_i, v_y_ij)
    if isinstance(v_x_ij, tuple):
        return tuple(
            a + b - c - d for a, b, c, d in zip(v_x_ij, carried_j, v_xy_i, carried_y)
        )
    return v_x_ij + carried_j - v_xy_i - carried_y


def estimate_loop_ratio(
    manifold: Manifold,
    rng: np.random.Generator,
    n_samples: int = 1000,
    scale: float = 1.0,
) -> float:
    """Empirical maximum of |loop defect| over the smaller opposite-side sum,
    sampled over random 4-tuples. Feeds the step-size validity check on
    manifolds whose curvature ratio has no closed form."""
    worst = 0.0
    produced = 0
    while produced < n_samples:
        pts = [manifold.random_point(rng) for _ in range(4)]
        try:
            defect = loop_defect(manifold, *pts)
            x_i, x_j, y_j, y_i = pts
            a = manifold.norm(x_i, manifold.log(x_i, y_i)) + manifold.norm(
                x_j, manifold.log(x_j, y_j)
            )
            b = manifold.norm(x_i, manifold.log(x_i, x_j)) + manifold.norm(
                y_i, manifold.log(y_i, y_j)
            )
        except CutLocusError:
            continue
        produced += 1
        denom = min(a, b)
        if denom < 1e-9:
            continue
        worst = max(worst, manifold.norm(x_i, defect) / denom)
    return worst
