"""Minimal 3-D geometry kernel.

Vectors are numpy arrays of shape (3,), matrices shape (3, 3).  Attitudes
are rotation matrices whose columns are the body axes expressed in the
inertial basis.  Everything here is a pure function; no state.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateAxisError, DivergenceError

# Orthonormality tolerance for a matrix to count as a rotation.
ROTATION_TOL = 1e-9
# Frobenius gate on R^T R - I beyond which an attitude is considered broken
# rather than repairable (corresponds to ~1e-3 singular-value deviation).
REPAIR_GATE = 3.5e-3


def vec3(x: float, y: float, z: float) -> np.ndarray:
    """Build a float64 3-vector."""
    return np.array([x, y, z], dtype=float)


def norm(a: np.ndarray) -> float:
    """Euclidean norm of a 3-vector (faster than np.linalg.norm here)."""
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def unit(a: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """a / |a|; raises if |a| <= floor."""
    n = norm(a)
    if n <= floor:
        raise DegenerateAxisError(f"cannot normalize near-zero vector (|a|={n:g})")
    return a / n


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product a x b (manual formula; np.cross is slow for singles)."""
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def skew(a: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a, so that skew(a) @ b == a x b."""
    return np.array(
        [
            [0.0, -a[2], a[1]],
            [a[2], 0.0, -a[0]],
            [-a[1], a[0], 0.0],
        ]
    )


def vex(m: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    """Inverse of skew: extract a from a skew-symmetric matrix.

    Raises ValueError if the input is not skew-symmetric within tol.
    """
    resid = max(
        abs(m[0, 0]), abs(m[1, 1]), abs(m[2, 2]),
        abs(m[0, 1] + m[1, 0]), abs(m[0, 2] + m[2, 0]), abs(m[1, 2] + m[2, 1]),
    )
    if resid > tol:
        raise ValueError(f"vex: matrix is not skew-symmetric (residual {resid:g} > {tol:g})")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def antisym(m: np.ndarray) -> np.ndarray:
    """Anti-symmetric part (m - m^T) / 2."""
    return 0.5 * (m - m.T)


def project_perp(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Project x onto the plane orthogonal to u.

    u must have norm > 1e-9.
    """
    n2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
    if n2 <= 1e-18:
        raise DegenerateAxisError("project_perp: axis norm below 1e-9")
    return x - (np.dot(u, x) / n2) * u


def is_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True if r is orthonormal with determinant +1 within tol."""
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.abs(r.T @ r - np.eye(3)).max() > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol


def assert_rotation(r: np.ndarray, tol: float = ROTATION_TOL, what: str = "matrix") -> None:
    if not is_rotation(r, tol):
        raise ValueError(f"{what} is not a rotation within {tol:g}")


def reorthonormalize(r: np.ndarray) -> np.ndarray:
    """Snap a near-rotation back onto SO(3) (polar factor).

    Intended for integrator drift repair: the input must satisfy
    ||R^T R - I||_F <= 3.5e-3 (about 1e-3 singular-value deviation),
    otherwise the state is treated as numerically broken.  Uses
    Newton-Schulz iteration, which converges to the polar factor (the
    Frobenius-closest rotation) for inputs this close to orthonormal.
    """
    if not np.all(np.isfinite(r)):
        raise DivergenceError("attitude matrix contains non-finite entries")
    err = r.T @ r - np.eye(3)
    fro = math.sqrt(float(np.sum(err * err)))
    if fro > REPAIR_GATE:
        raise DivergenceError(
            f"attitude too far from SO(3) to repair (||R^T R - I||_F = {fro:.3e})"
        )
    out = r
    # Two iterations push ~1e-3 deviations below 1e-12.
    for _ in range(3):
        out = 1.5 * out - 0.5 * (out @ (out.T @ out))
        err = out.T @ out - np.eye(3)
        if np.abs(err).max() < 1e-13:
            break
    if np.linalg.det(out) < 0.0:
        raise DivergenceError("attitude matrix has negative determinant")
    return out


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle of r in [0, pi], from the trace."""
    c = 0.5 * (float(np.trace(r)) - 1.0)
    return math.acos(min(1.0, max(-1.0, c)))


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (nonzero) axis."""
    k = unit(axis)
    kx = skew(k)
    return np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)
