"""Fixed-size 3D linear algebra used by the solver and the metrics.

Vectors and matrices are plain numpy arrays of shape (3,) and (3, 3). Everything
in here computes in float64, whatever the precision of the caller's arrays.
"""

from dataclasses import dataclass
import math
from typing import Iterable, Tuple, Union

import numpy as np
import numpy.typing as npt
from typing_extensions import TypeAlias

Vec3: TypeAlias = npt.NDArray[np.floating]
Mat3: TypeAlias = npt.NDArray[np.floating]
ArrayLike3: TypeAlias = Union[Vec3, Iterable[float]]

POLAR_TOLERANCE = 1e-9
POLAR_MAX_ITERATIONS = 64
DEGENERATE_DETERMINANT = 1e-12
SINGULAR_EIGENVALUE_RATIO = 1e-10


class DegenerateConfigurationError(Exception):
    pass


class RankDeficientError(Exception):
    """The matrix has a (near) zero principal value along `axis`."""

    def __init__(self, message: str, axis: Vec3):
        super().__init__(message)
        self.message = message
        self.axis = axis

    def __reduce__(self):
        return (self.__class__, (self.message, self.axis))


def vec3(values: ArrayLike3) -> Vec3:
    array = np.asarray(values, dtype=np.float64).reshape(3)
    return array


def skew(v: ArrayLike3) -> Mat3:
    x, y, z = vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def is_symmetric_psd(M: Mat3, tolerance: float = 1e-9) -> bool:
    M = np.asarray(M, dtype=np.float64)
    scale = max(abs(float(np.trace(M))), 1.0)
    if np.max(np.abs(M - M.T)) > tolerance * scale:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).min() >= -tolerance * scale)


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion (w, x, y, z)."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def identity(cls) -> "Rotation":
        return cls()

    @classmethod
    def from_quaternion(cls, w: float, x: float, y: float, z: float) -> "Rotation":
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        if norm == 0.0:
            raise DegenerateConfigurationError("Cannot normalize a zero quaternion.")
        if w < 0.0:
            norm = -norm
        return cls(w / norm, x / norm, y / norm, z / norm)

    @classmethod
    def from_axis_angle(cls, axis: ArrayLike3, angle: float) -> "Rotation":
        axis = vec3(axis)
        length = float(np.linalg.norm(axis))
        if length == 0.0:
            return cls.identity()
        axis = axis / length
        half = 0.5 * angle
        s = math.sin(half)
        w, x, y, z = math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        return cls(w / norm, x / norm, y / norm, z / norm)

    @classmethod
    def from_matrix(cls, matrix: Mat3) -> "Rotation":
        m = np.asarray(matrix, dtype=np.float64)
        trace = m[0, 0] + m[1, 1] + m[2, 2]
        if trace > 0.0:
            s = 2.0 * math.sqrt(trace + 1.0)
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return cls.from_quaternion(w, x, y, z)

    @classmethod
    def between_vectors(cls, source: ArrayLike3, target: ArrayLike3) -> "Rotation":
        """Shortest-arc rotation taking direction `source` onto direction `target`."""
        a = vec3(source)
        b = vec3(target)
        a = a / np.linalg.norm(a)
        b = b / np.linalg.norm(b)
        cosine = float(np.dot(a, b))
        if cosine < -1.0 + 1e-12:
            helper = np.eye(3)[int(np.argmin(np.abs(a)))]
            axis = np.cross(a, helper)
            return cls.from_axis_angle(axis, math.pi)
        axis = np.cross(a, b)
        return cls.from_quaternion(1.0 + cosine, *axis)

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.w, self.x, self.y, self.z])

    def as_matrix(self) -> Mat3:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def inverse(self) -> "Rotation":
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Rotation") -> "Rotation":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Rotation.from_quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def apply(self, vectors: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return np.asarray(vectors, dtype=np.float64) @ self.as_matrix().T

    def angle(self) -> float:
        """Rotation angle in radians, in [0, pi]."""
        vector_norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        return 2.0 * math.atan2(vector_norm, abs(self.w))

    def twist_angle(self, axis: ArrayLike3) -> float:
        """Signed angle of the twist component about `axis`, in (-pi, pi]."""
        axis = vec3(axis)
        axis = axis / np.linalg.norm(axis)
        projection = self.x * axis[0] + self.y * axis[1] + self.z * axis[2]
        angle = 2.0 * math.atan2(projection, self.w)
        return wrap_angle(angle)


def wrap_angle(angle: float) -> float:
    """Map an angle in radians to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def polar_decompose(A: Mat3) -> Tuple[Rotation, Mat3]:
    """A = R S with R the closest rotation to A and S symmetric positive definite.

    Scaled Newton iteration on X <- (g X + X^-T / g) / 2, starting from A.
    """
    A = np.asarray(A, dtype=np.float64)
    norm = float(np.linalg.norm(A))
    if norm == 0.0 or not np.all(np.isfinite(A)):
        raise DegenerateConfigurationError(
            f"Cannot polar-decompose a zero or non-finite matrix:\n{A}"
        )
    X = A / norm
    if np.linalg.det(X) <= DEGENERATE_DETERMINANT:
        raise DegenerateConfigurationError(
            "The moment matrix is degenerate or reflects (normalized determinant"
            f" {np.linalg.det(X):.3e}), no proper rotation can be extracted."
        )
    scaled = True
    for _ in range(POLAR_MAX_ITERATIONS):
        X_inv_t = np.linalg.inv(X).T
        if scaled:
            gamma = math.sqrt(np.linalg.norm(X_inv_t) / np.linalg.norm(X))
        else:
            gamma = 1.0
        X_next = 0.5 * (gamma * X + X_inv_t / gamma)
        change = float(np.linalg.norm(X_next - X))
        X = X_next
        if change <= POLAR_TOLERANCE:
            break
        if change < 1e-2:
            scaled = False
    else:
        raise DegenerateConfigurationError(
            f"Polar decomposition did not converge in {POLAR_MAX_ITERATIONS}"
            " iterations."
        )
    S = X.T @ A
    S = 0.5 * (S + S.T)
    return Rotation.from_matrix(X), S


def invert_spd(M: Mat3) -> Mat3:
    M = np.asarray(M, dtype=np.float64)
    symmetric = 0.5 * (M + M.T)
    eigenvalues, eigenvectors = np.linalg.eigh(symmetric)
    trace = float(eigenvalues.sum())
    smallest = int(np.argmin(eigenvalues))
    if trace <= 0.0 or eigenvalues[smallest] < SINGULAR_EIGENVALUE_RATIO * trace:
        axis = eigenvectors[:, smallest]
        axis = axis * np.sign(axis[np.argmax(np.abs(axis))])
        raise RankDeficientError(
            f"Matrix is rank deficient along axis {np.round(axis, 9).tolist()}"
            f" (eigenvalue {eigenvalues[smallest]:.3e}, trace {trace:.3e}).",
            axis=axis,
        )
    return (eigenvectors / eigenvalues) @ eigenvectors.T


def geodesic_angle(r1: Rotation, r2: Rotation) -> float:
    """Angle of r1^-1 r2 in degrees, in [0, 180]."""
    return math.degrees((r1.inverse() * r2).angle())


def accumulated_angle(theta1: float, theta2: float) -> float:
    """Unbounded difference of two accumulated (unwrapped) angles, in degrees."""
    return abs(theta2 - theta1)


class AngleUnwrapper:
    """Turns a stream of orientations into an accumulated angle about a fixed axis.

    Consecutive samples must differ by less than half a turn about the axis.
    """

    def __init__(self, axis: ArrayLike3 = (0.0, 0.0, 1.0)):
        self.axis = vec3(axis)
        self._previous_wrapped: Union[float, None] = None
        self.accumulated = 0.0

    def update(self, rotation: Rotation) -> float:
        wrapped = rotation.twist_angle(self.axis)
        if self._previous_wrapped is None:
            self.accumulated = wrapped
        else:
            self.accumulated += wrap_angle(wrapped - self._previous_wrapped)
        self._previous_wrapped = wrapped
        return self.accumulated
