"""Director frames, strain components and the elastic/natural split.

Vectors written in *director components* (``u_k = u . d_k``) carry no
``_world`` suffix; vectors expressed in the fixed basis ``{e_k}`` do.
Frames are full 3x3 rotation matrices whose columns are the directors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientGridError, InvalidFrameError, PreconditionError

FRAME_ATOL = 1e-12


def skew(w) -> np.ndarray:
    """Matrix ``W`` with ``W @ x == cross(w, x)``; broadcasts over leading axes."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def axial(W) -> np.ndarray:
    """Axial vector of the skew part of ``W``."""
    W = np.asarray(W, dtype=float)
    return 0.5 * np.stack(
        [W[..., 2, 1] - W[..., 1, 2], W[..., 0, 2] - W[..., 2, 0], W[..., 1, 0] - W[..., 0, 1]],
        axis=-1,
    )


def rotation_exp(w) -> np.ndarray:
    """Exponential of ``skew(w)`` by the Rodrigues formula.

    Series expansions of the two coefficients are used below an angle of
    1e-4 so the result stays orthogonal to round-off for tiny rotations.
    """
    w = np.asarray(w, dtype=float)
    theta2 = np.sum(w * w, axis=-1)
    theta = np.sqrt(theta2)
    small = theta < 1e-4
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta2 / 6.0 + theta2**2 / 120.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta2 / 24.0 + theta2**2 / 720.0, (1.0 - np.cos(safe)) / safe**2)
    K = skew(w)
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + a[..., None, None] * K + b[..., None, None] * (K @ K)


def rotation_about(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return rotation_exp(np.multiply.outer(np.asarray(angle, dtype=float), axis))


def frame_error(R) -> float:
    """Max-norm distance of ``R`` from SO(3): orthonormality and determinant."""
    R = np.asarray(R, dtype=float)
    eye = np.eye(3)
    ortho = np.max(np.abs(np.swapaxes(R, -1, -2) @ R - eye))
    det = np.max(np.abs(np.linalg.det(R) - 1.0))
    return float(max(ortho, det))


def check_frames(R, atol: float = FRAME_ATOL) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise InvalidFrameError(f"frames must be 3x3, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InvalidFrameError("frame contains non-finite entries")
    err = frame_error(R)
    if err > atol:
        raise InvalidFrameError(f"not a proper rotation: deviation {err:.3e} > {atol:.1e}")
    return R


def renormalize(R) -> np.ndarray:
    """Gram-Schmidt on the columns of ``R``; never applied implicitly."""
    R = np.array(R, dtype=float)
    d1 = R[..., :, 0] / np.linalg.norm(R[..., :, 0], axis=-1, keepdims=True)
    d2 = R[..., :, 1] - np.sum(d1 * R[..., :, 1], axis=-1, keepdims=True) * d1
    d2 /= np.linalg.norm(d2, axis=-1, keepdims=True)
    d3 = np.cross(d1, d2)
    return np.stack([d1, d2, d3], axis=-1)


def random_rotation(rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniformly distributed rotations from normalized Gaussian quaternions."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    q = rng.standard_normal(shape + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    R = np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], -1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], -1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )
    return R


@dataclass(frozen=True)
class DirectorFrame:
    """Proper rotation ``R`` whose columns are the directors ``d_k = R e_k``."""

    R: np.ndarray

    def __post_init__(self):
        R = check_frames(np.array(self.R, dtype=float))
        if R.shape != (3, 3):
            raise InvalidFrameError(f"a single frame is 3x3, got {R.shape}")
        R.setflags(write=False)
        object.__setattr__(self, "R", R)

    @classmethod
    def identity(cls) -> "DirectorFrame":
        return cls(np.eye(3))

    @classmethod
    def about(cls, axis, angle) -> "DirectorFrame":
        return cls(rotation_about(axis, angle))

    @property
    def directors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.R[:, 0], self.R[:, 1], self.R[:, 2]

    def to_world(self, components) -> np.ndarray:
        return self.R @ np.asarray(components, dtype=float)

    def to_components(self, world) -> np.ndarray:
        return self.R.T @ np.asarray(world, dtype=float)


def _vec3(x, name):
    x = np.array(x, dtype=float)
    if x.shape != (3,) or not np.all(np.isfinite(x)):
        raise PreconditionError(f"{name} must be a finite 3-vector, got {x!r}")
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class StrainState:
    """Director components of the Darboux vector ``u`` and tangent ``v``."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _vec3(self.u, "u"))
        object.__setattr__(self, "v", _vec3(self.v, "v"))
        if not self.v[2] > 0:
            raise PreconditionError(f"orientation constraint violated: v_3 = {self.v[2]} <= 0")


@dataclass(frozen=True)
class NaturalState:
    """Natural strain components, optionally with the natural frame ``R_d``."""

    u_d: np.ndarray
    v_d: np.ndarray
    R_d: DirectorFrame | None = None

    def __post_init__(self):
        object.__setattr__(self, "u_d", _vec3(self.u_d, "u_d"))
        object.__setattr__(self, "v_d", _vec3(self.v_d, "v_d"))
        if not self.v_d[2] > 0:
            raise PreconditionError(f"orientation constraint violated: v_d3 = {self.v_d[2]} <= 0")
        if self.R_d is not None and not isinstance(self.R_d, DirectorFrame):
            object.__setattr__(self, "R_d", DirectorFrame(self.R_d))


@dataclass(frozen=True)
class ElasticDecomposition:
    """Elastic part of the deformation from the natural to the current configuration.

    ``u_e``/``v_e`` are world vectors; ``u_e_components``/``v_e_components``
    are their components on the current directors.
    """

    R_e: DirectorFrame
    u_e: np.ndarray
    v_e: np.ndarray
    u_e_components: np.ndarray
    v_e_components: np.ndarray


def elastic_decompose(
    strain: StrainState, frame: DirectorFrame, natural: NaturalState
) -> ElasticDecomposition:
    """Split the current configuration into natural and elastic parts.

    ``R_e = R R_d^T``, ``v_e = v - R_e v_d`` and ``u_e = u - R_e u_d``.
    """
    if natural.R_d is None:
        raise PreconditionError("elastic_decompose needs the natural frame R_d")
    if not isinstance(frame, DirectorFrame):
        frame = DirectorFrame(frame)
    R, R_d = frame.R, natural.R_d.R
    R_e = R @ R_d.T
    u_world = R @ strain.u
    v_world = R @ strain.v
    u_d_world = R_d @ natural.u_d
    v_d_world = R_d @ natural.v_d
    u_e = u_world - R_e @ u_d_world
    v_e = v_world - R_e @ v_d_world
    return ElasticDecomposition(
        R_e=DirectorFrame(R_e),
        u_e=u_e,
        v_e=v_e,
        u_e_components=R.T @ u_e,
        v_e_components=R.T @ v_e,
    )


@dataclass(frozen=True)
class ConfigurationPair:
    """A natural and a current configuration, all vectors in world form."""

    R_d: np.ndarray
    u_d_world: np.ndarray
    v_d_world: np.ndarray
    R: np.ndarray
    u_world: np.ndarray
    v_world: np.ndarray

    @classmethod
    def from_components(cls, R_d, u_d, v_d, R, u, v) -> "ConfigurationPair":
        R_d = check_frames(R_d)
        R = check_frames(R)
        return cls(
            R_d=R_d,
            u_d_world=R_d @ np.asarray(u_d, float),
            v_d_world=R_d @ np.asarray(v_d, float),
            R=R,
            u_world=R @ np.asarray(u, float),
            v_world=R @ np.asarray(v, float),
        )

    @property
    def R_e(self) -> np.ndarray:
        return self.R @ self.R_d.T

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(u_d, v_d, u, v)`` in director components, via ``R^T (R_e x)``."""
        R_e = self.R_e
        Rt = self.R.T
        return (
            Rt @ (R_e @ self.u_d_world),
            Rt @ (R_e @ self.v_d_world),
            Rt @ self.u_world,
            Rt @ self.v_world,
        )


def apply_frame_change(Q, pair: ConfigurationPair) -> ConfigurationPair:
    """Superpose the rigid rotation ``Q`` on both configurations of ``pair``."""
    Q = check_frames(Q)
    if Q.shape != (3, 3):
        raise InvalidFrameError("Q must be a single 3x3 rotation")
    return ConfigurationPair(
        R_d=Q @ pair.R_d,
        u_d_world=Q @ pair.u_d_world,
        v_d_world=Q @ pair.v_d_world,
        R=Q @ pair.R,
        u_world=Q @ pair.u_world,
        v_world=Q @ pair.v_world,
    )


def darboux_of_rotation_field(R, spacing: float, atol: float = 1e-10) -> np.ndarray:
    """Director components of the Darboux vector of a sampled frame field.

    Uses ``u = 1/2 sum_k d_k x d_k'`` with second-order central differences
    in the interior and second-order one-sided stencils at both ends.

    Parameters
    ----------
    R : array_like, shape (N, 3, 3)
        Frames at ``N >= 3`` equally spaced nodes.
    spacing : float
        Node spacing ``h``.

    Returns
    -------
    ndarray, shape (N, 3)
    """
    R = np.asarray([f.R if isinstance(f, DirectorFrame) else f for f in R], dtype=float)
    if R.ndim != 3 or R.shape[0] < 3:
        raise InsufficientGridError(f"need at least 3 frames, got shape {R.shape}")
    check_frames(R, atol=atol)
    dR = np.gradient(R, spacing, axis=0, edge_order=2)
    u_world = 0.5 * np.sum(np.cross(R, dR, axis=1), axis=2)
    return np.einsum("nji,nj->ni", R, u_world)


def rotation_field_of_darboux(u, R0, spacing: float) -> np.ndarray:
    """Integrate ``R' = R skew(u)`` node to node from ``R(0) = R0``.

    Each interval uses the exact exponential of the interval-averaged
    (midpoint) Darboux components, so every output frame is a rotation to
    round-off and the global error is second order in ``spacing``.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[1] != 3 or not np.all(np.isfinite(u)):
        raise PreconditionError(f"u must be a finite (N, 3) array, got shape {u.shape}")
    R0 = R0.R if isinstance(R0, DirectorFrame) else check_frames(R0)
    steps = rotation_exp(0.5 * spacing * (u[1:] + u[:-1]))
    out = np.empty((u.shape[0], 3, 3))
    out[0] = R0
    for i, E in enumerate(steps):
        out[i + 1] = out[i] @ E
    return out
