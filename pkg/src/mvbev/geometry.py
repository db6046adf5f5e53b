"""Pinhole camera model, projection, and ground-plane back-projection.

Coordinate conventions (used everywhere in this package):

  World frame (right-handed):
    x, y span the site ground plane in meters, z points up.
    Objects live near a known horizontal plane z = plane_altitude.

  Camera frame (standard computer vision):
    x right, y down, z forward along the optical axis.
    Extrinsics are world-to-camera:  x_cam = R @ x_world + T
    so the camera center in world coordinates is C = -R^T @ T.

  Image frame:
    u right, v down, in pixels; (0, 0) is the center of the top-left
    pixel, so the sampleable domain is [0, W-1] x [0, H-1].

Back-projection intersects the viewing ray with a horizontal plane:
    X(s) = s * R^-1 K^-1 U  -  R^-1 T,   solve  X(s).z = plane_altitude.
Because K has last row (0, 0, 1), the parameter s equals the camera-frame
depth of the intersection, so s <= 0 means the hit is behind the camera.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthNonPositive, IntersectionBehindCamera, RayParallelToPlane

_MAT_TOL = 1e-9  # tolerance for rotation/intrinsic matrix invariants


@dataclass
class CameraModel:
    """Calibrated pinhole camera.

    K: 3x3 intrinsics (pixels), upper triangular with K[2,2] = 1.
    R: 3x3 world-to-camera rotation.
    T: 3-vector translation (meters).
    image_size: (width, height) in pixels.
    view_id: small integer identifying the view in a rig.

    Construction only checks shapes/finiteness; use :func:`validate_camera`
    to diagnose invariant violations (loaders reject invalid cameras, but
    a diagnosable model must still be constructible).
    """

    K: np.ndarray
    R: np.ndarray
    T: np.ndarray
    image_size: tuple[int, int]
    view_id: int = 0

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.T = np.asarray(self.T, dtype=float).reshape(3)
        if self.K.shape != (3, 3) or self.R.shape != (3, 3):
            raise ValueError("K and R must be 3x3 matrices")
        if not (np.all(np.isfinite(self.K)) and np.all(np.isfinite(self.R))
                and np.all(np.isfinite(self.T))):
            raise ValueError("camera parameters must be finite")
        self.image_size = (int(self.image_size[0]), int(self.image_size[1]))

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates, C = -R^T @ T."""
        return -self.R.T @ self.T


@dataclass(frozen=True)
class PixelHomogeneous:
    """Pixel position with homogeneous scale fixed to 1 on construction."""

    u: float
    v: float
    w: float = 1.0

    def __post_init__(self):
        if self.w == 0:
            raise ValueError("homogeneous scale must be nonzero")
        if self.w != 1.0:
            object.__setattr__(self, "u", self.u / self.w)
            object.__setattr__(self, "v", self.v / self.w)
            object.__setattr__(self, "w", 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, 1.0])


@dataclass(frozen=True)
class WorldPoint:
    """Point in the site frame, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError("world point components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def project_point(cam: CameraModel, p: WorldPoint) -> PixelHomogeneous:
    """Project a world point to a pixel (no clipping to image bounds).

    Raises DepthNonPositive when the point is at or behind the camera plane.
    """
    cam_pt = cam.R @ p.as_array() + cam.T
    if cam_pt[2] <= 0:
        raise DepthNonPositive(
            f"camera-frame depth {cam_pt[2]:.6g} is not positive")
    uvw = cam.K @ cam_pt
    return PixelHomogeneous(uvw[0] / uvw[2], uvw[1] / uvw[2])


def backproject_to_plane(cam: CameraModel, u: PixelHomogeneous,
                         plane_altitude: float) -> WorldPoint:
    """Intersect the viewing ray through pixel ``u`` with z = plane_altitude.

    The returned point satisfies |z - plane_altitude| < 1e-9 and re-projects
    onto ``u`` within 1e-6 px.

    Raises RayParallelToPlane for horizon pixels and IntersectionBehindCamera
    when the plane hit has non-positive camera depth.
    """
    direction = np.linalg.solve(cam.R, np.linalg.solve(cam.K, u.as_array()))
    center = -cam.R.T @ cam.T
    if abs(direction[2]) < 1e-15:
        raise RayParallelToPlane(
            f"pixel ({u.u:.6g}, {u.v:.6g}) views parallel to the plane")
    s = (plane_altitude - center[2]) / direction[2]
    if s <= 0:
        raise IntersectionBehindCamera(
            f"plane z={plane_altitude:.6g} intersects the ray at depth {s:.6g}")
    hit = center + s * direction
    return WorldPoint(hit[0], hit[1], plane_altitude)


def validate_camera(cam: CameraModel) -> list[str]:
    """Diagnose CameraModel invariants; empty list means all hold."""
    violations = []
    rtr = cam.R.T @ cam.R
    if np.max(np.abs(rtr - np.eye(3))) > _MAT_TOL:
        violations.append("rotation orthonormality: R^T R deviates from I")
    if abs(np.linalg.det(cam.R) - 1.0) > _MAT_TOL:
        violations.append(f"rotation determinant: det(R) = {np.linalg.det(cam.R):.6g}")
    if cam.K[0, 0] <= 0 or cam.K[1, 1] <= 0:
        violations.append("focal length: K[0,0] and K[1,1] must be positive")
    lower = np.abs([cam.K[1, 0], cam.K[2, 0], cam.K[2, 1]])
    if np.max(lower) > _MAT_TOL:
        violations.append("intrinsics upper triangular: below-diagonal entries nonzero")
    if abs(cam.K[2, 2] - 1.0) > _MAT_TOL:
        violations.append(f"intrinsics normalization: K[2,2] = {cam.K[2, 2]:.6g}")
    if cam.image_size[0] <= 0 or cam.image_size[1] <= 0:
        violations.append("image size: components must be positive")
    return violations


def look_at_camera(position, target, K, image_size, view_id=0) -> CameraModel:
    """Build a camera at ``position`` looking at ``target`` with zero roll.

    Camera x stays horizontal, y points down-ish (image rows increase toward
    the ground). Degenerate for a straight-down view (forward parallel to z).
    """
    position = np.asarray(position, dtype=float)
    forward = np.asarray(target, dtype=float) - position
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise ValueError("camera position and target coincide")
    z_c = forward / norm
    x_c = np.cross([0.0, 0.0, -1.0], z_c)
    x_norm = np.linalg.norm(x_c)
    if x_norm < 1e-12:
        raise ValueError("straight-down view has no horizontal reference")
    x_c /= x_norm
    y_c = np.cross(z_c, x_c)
    R = np.stack([x_c, y_c, z_c])
    T = -R @ position
    return CameraModel(K=np.asarray(K, dtype=float), R=R, T=T,
                       image_size=image_size, view_id=view_id)


def intrinsics(focal: float, image_size: tuple[int, int]) -> np.ndarray:
    """Square-pixel K with the principal point at the image center."""
    w, h = image_size
    return np.array([[focal, 0.0, (w - 1) / 2.0],
                     [0.0, focal, (h - 1) / 2.0],
                     [0.0, 0.0, 1.0]])
