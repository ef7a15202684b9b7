"""SO(3)/SE(3) kernels: hat/vee maps, exponential/logarithm, left Jacobians.

Conventions used throughout the package:

- a twist is a length-6 vector ``xi = [rho, theta]`` with the translation
  part ``rho`` first and the rotation part ``theta`` second,
- ``hat(xi)`` is the 4x4 matrix with ``hat3(theta)`` in the upper-left block
  and ``rho`` in the last column,
- poses compose body-frame perturbations on the right, ``X @ exp(hat(xi))``,
- the left Jacobian satisfies
  ``d/de log(exp(e*hat(eta)) @ exp(hat(xi)))^vee |_{e=0} = inv(J_L(xi)) @ eta``.

Coefficients with removable singularities switch to Taylor expansions near
zero; the strongly cancelling ones switch well before the closed forms lose
precision.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "CutLocusError",
    "hat3",
    "vee3",
    "hat",
    "vee",
    "so3_exp",
    "so3_log",
    "so3_left_jacobian",
    "so3_left_jacobian_inv",
    "se3_exp",
    "se3_log",
    "exp_matrix",
    "log_matrix",
    "left_jacobian",
    "left_jacobian_inv",
    "left_jacobian_inv_transpose",
    "polar_project",
    "quat_from_rotation",
    "rotation_from_quat",
]

# Below this angle the A/B coefficients (mild cancellation) use Taylor forms.
_TINY_ANGLE = 1e-6
# Below this angle the C/D/E/G coefficients (severe cancellation) use Taylor
# forms; both branches agree to ~1e-13 at the switch.
_SMALL_ANGLE = 1e-2
# Rotations closer to pi than this are treated as on the cut locus.
_CUT_MARGIN = 1e-9


class CutLocusError(ValueError):
    """Logarithm requested at or beyond the injectivity radius."""


def hat3(w: np.ndarray) -> np.ndarray:
    """3-vector to skew-symmetric matrix."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee3(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def hat(xi: np.ndarray) -> np.ndarray:
    """Twist vector [rho, theta] to its 4x4 matrix form."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (6,):
        raise ValueError(f"twist must have shape (6,), got {xi.shape}")
    out = np.zeros((4, 4))
    out[:3, :3] = hat3(xi[3:])
    out[:3, 3] = xi[:3]
    return out


def vee(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`hat`; rejects matrices off the twist pattern."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"twist matrix must be 4x4, got {m.shape}")
    if np.max(np.abs(m[3, :])) > tol:
        raise ValueError("twist matrix must have a zero last row")
    sym = m[:3, :3] + m[:3, :3].T
    if np.max(np.abs(sym)) > tol:
        raise ValueError("rotation block of a twist matrix must be skew-symmetric")
    return np.concatenate([m[:3, 3], vee3(m[:3, :3])])


def _coeff_a(t: float) -> float:
    # sin(t)/t
    if t < _TINY_ANGLE:
        t2 = t * t
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return math.sin(t) / t


def _coeff_b(t: float) -> float:
    # (1 - cos t)/t^2
    if t < _TINY_ANGLE:
        t2 = t * t
        return 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    return (1.0 - math.cos(t)) / (t * t)


def _coeff_c(t: float) -> float:
    # (t - sin t)/t^3
    if t < _SMALL_ANGLE:
        t2 = t * t
        return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    return (t - math.sin(t)) / (t * t * t)


def _coeff_d(t: float) -> float:
    # (1 - t^2/2 - cos t)/t^4
    if t < _SMALL_ANGLE:
        t2 = t * t
        return -1.0 / 24.0 + t2 / 720.0 - t2 * t2 / 40320.0
    t2 = t * t
    return (1.0 - t2 / 2.0 - math.cos(t)) / (t2 * t2)


def _coeff_e(t: float) -> float:
    # (t - sin t - t^3/6)/t^5
    if t < _SMALL_ANGLE:
        t2 = t * t
        return -1.0 / 120.0 + t2 / 5040.0 - t2 * t2 / 362880.0
    return (t - math.sin(t) - t**3 / 6.0) / t**5


def _coeff_g(t: float) -> float:
    # 1/t^2 - (1 + cos t)/(2 t sin t), the J_l^{-1} quadratic coefficient
    if t < _SMALL_ANGLE:
        t2 = t * t
        return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    return 1.0 / (t * t) - (1.0 + math.cos(t)) / (2.0 * t * math.sin(t))


def so3_exp(theta: np.ndarray) -> np.ndarray:
    """Rodrigues' formula for a rotation vector."""
    theta = np.asarray(theta, dtype=float)
    t = float(np.linalg.norm(theta))
    k = hat3(theta)
    return np.eye(3) + _coeff_a(t) * k + _coeff_b(t) * (k @ k)


def so3_log(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix to rotation vector; raises on (near-)pi rotations."""
    rot = np.asarray(rot, dtype=float)
    w = vee3(rot - rot.T) / 2.0  # sin(t) * axis
    c = (np.trace(rot) - 1.0) / 2.0
    s = float(np.linalg.norm(w))
    t = math.atan2(s, c)
    if t >= math.pi - _CUT_MARGIN:
        raise CutLocusError(f"rotation angle {t:.12f} is at the cut locus (pi)")
    if t < 1e-7:
        return w * (1.0 + t * t / 6.0)
    if t < math.pi - 1e-4:
        return w * (t / s)
    # Near pi the (R - R^T) route is ill-conditioned; recover the axis from
    # the symmetric part instead and orient it with the residual skew part.
    aat = ((rot + rot.T) / 2.0 - c * np.eye(3)) / (1.0 - c)
    i = int(np.argmax(np.diag(aat)))
    axis = aat[i] / math.sqrt(max(aat[i, i], 1e-300))
    axis = axis / np.linalg.norm(axis)
    if float(np.dot(axis, w)) < 0.0:
        axis = -axis
    return t * axis


def so3_left_jacobian(theta: np.ndarray) -> np.ndarray:
    t = float(np.linalg.norm(theta))
    k = hat3(theta)
    return np.eye(3) + _coeff_b(t) * k + _coeff_c(t) * (k @ k)


def so3_left_jacobian_inv(theta: np.ndarray) -> np.ndarray:
    t = float(np.linalg.norm(theta))
    if t >= math.pi - _CUT_MARGIN:
        raise CutLocusError(f"left Jacobian inverse undefined at angle {t:.12f} >= pi")
    k = hat3(theta)
    return np.eye(3) - 0.5 * k + _coeff_g(t) * (k @ k)


def se3_exp(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Twist to (rotation, translation)."""
    xi = np.asarray(xi, dtype=float)
    rho, theta = xi[:3], xi[3:]
    return so3_exp(theta), so3_left_jacobian(theta) @ rho


def se3_log(rot: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """(rotation, translation) to twist; raises on cut-locus rotations."""
    theta = so3_log(rot)
    rho = so3_left_jacobian_inv(theta) @ np.asarray(trans, dtype=float)
    return np.concatenate([rho, theta])


def exp_matrix(xi: np.ndarray) -> np.ndarray:
    """Twist to a 4x4 homogeneous transform."""
    rot, trans = se3_exp(xi)
    out = np.eye(4)
    out[:3, :3] = rot
    out[:3, 3] = trans
    return out


def log_matrix(transform: np.ndarray) -> np.ndarray:
    transform = np.asarray(transform, dtype=float)
    return se3_log(transform[:3, :3], transform[:3, 3])


def _q_block(rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Translation-rotation coupling block of the SE(3) left Jacobian."""
    t = float(np.linalg.norm(theta))
    rx = hat3(rho)
    tx = hat3(theta)
    c = _coeff_c(t)
    d = _coeff_d(t)
    e = _coeff_e(t)
    m2 = tx @ rx + rx @ tx + tx @ rx @ tx
    m3 = tx @ tx @ rx + rx @ tx @ tx - 3.0 * (tx @ rx @ tx)
    m4 = tx @ rx @ tx @ tx + tx @ tx @ rx @ tx
    return 0.5 * rx + c * m2 - d * m3 - 0.5 * (d - 3.0 * e) * m4


def left_jacobian(xi: np.ndarray) -> np.ndarray:
    """6x6 left Jacobian of SE(3) at ``xi = [rho, theta]``."""
    xi = np.asarray(xi, dtype=float)
    rho, theta = xi[:3], xi[3:]
    jl = so3_left_jacobian(theta)
    out = np.zeros((6, 6))
    out[:3, :3] = jl
    out[3:, 3:] = jl
    out[:3, 3:] = _q_block(rho, theta)
    return out


def left_jacobian_inv(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    rho, theta = xi[:3], xi[3:]
    t = float(np.linalg.norm(theta))
    if t >= math.pi - _CUT_MARGIN:
        raise CutLocusError(f"left Jacobian inverse undefined at angle {t:.12f} >= pi")
    jli = so3_left_jacobian_inv(theta)
    out = np.zeros((6, 6))
    out[:3, :3] = jli
    out[3:, 3:] = jli
    out[:3, 3:] = -jli @ _q_block(rho, theta) @ jli
    return out


def left_jacobian_inv_transpose(xi: np.ndarray) -> np.ndarray:
    return left_jacobian_inv(xi).T


def polar_project(rot: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (Frobenius) with determinant +1."""
    u, _, vt = np.linalg.svd(rot)
    d = np.eye(3)
    d[2, 2] = np.sign(np.linalg.det(u @ vt))
    return u @ d @ vt


def quat_from_rotation(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z) with w >= 0."""
    rot = np.asarray(rot, dtype=float)
    tr = np.trace(rot)
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [
                0.25 * s,
                (rot[2, 1] - rot[1, 2]) / s,
                (rot[0, 2] - rot[2, 0]) / s,
                (rot[1, 0] - rot[0, 1]) / s,
            ]
        )
    else:
        i = int(np.argmax(np.diag(rot)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(1.0 + rot[i, i] - rot[j, j] - rot[k, k], 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (rot[k, j] - rot[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (rot[j, i] + rot[i, j]) / s
        q[1 + k] = (rot[k, i] + rot[i, k]) / s
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def rotation_from_quat(q: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to rotation matrix (normalizes input)."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
