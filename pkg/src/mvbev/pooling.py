"""Feature perspective pooling: 3D box -> per-view ROI -> pooled patch.

BEV-warped features smear objects into streaks that depend on where the
object sits, which corrupts orientation estimation. Pooling instead happens
in each original view: the eight vertices of the object's 3D box are
projected into the image, their minimum outer rectangle becomes the ROI,
and classical max pooling with integer bin edges reduces the ROI to a
fixed-size patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bev import FeatureGrid
from .boxes import wrap_angle
from .errors import AllVerticesBehindCamera, EmptyROI, NonPositiveSize
from .geometry import CameraModel, WorldPoint


@dataclass(frozen=True)
class OrientedBox3D:
    """Upright 3D box: center (z = object altitude), (l, w, h) size, yaw.

    Footprint follows the package convention: w spans the box's local x
    axis (yaw direction), l its local y axis; h is vertical, so the bottom
    face sits at center.z - h/2 and the top at center.z + h/2.
    """

    center: WorldPoint
    size: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        l, w, h = self.size
        if l <= 0 or w <= 0 or h <= 0:
            raise NonPositiveSize(f"box size must be positive, got {self.size}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class ROI:
    """Pixel-space region of interest, clamped to the image.

    ``partial`` marks ROIs built with some vertices dropped behind the
    camera; ``empty`` marks projections that miss the image entirely.
    """

    view_id: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    partial: bool = False
    empty: bool = False


def box3d_vertices(box: OrientedBox3D) -> list[WorldPoint]:
    """Eight corners: rotated footprint at bottom then top face."""
    l, w, h = box.size
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    hx, hy, hz = w / 2.0, l / 2.0, h / 2.0
    footprint = [(hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)]
    out = []
    for dz in (-hz, hz):
        for fx, fy in footprint:
            out.append(WorldPoint(box.center.x + c * fx - s * fy,
                                  box.center.y + s * fx + c * fy,
                                  box.center.z + dz))
    return out


def project_roi(box: OrientedBox3D, cam: CameraModel) -> ROI:
    """Minimum outer rectangle of the projected box vertices.

    Vertices behind the camera are dropped (flagged ``partial``); if all
    eight are behind, raises AllVerticesBehindCamera. Bounds are clamped to
    the sampleable image domain [0, W-1] x [0, H-1]; an ROI that misses the
    image comes back flagged ``empty``.
    """
    us, vs = [], []
    dropped = 0
    for vert in box3d_vertices(box):
        cam_pt = cam.R @ vert.as_array() + cam.T
        if cam_pt[2] <= 0:
            dropped += 1
            continue
        uvw = cam.K @ cam_pt
        us.append(uvw[0] / uvw[2])
        vs.append(uvw[1] / uvw[2])
    if dropped == 8:
        raise AllVerticesBehindCamera("no box vertex projects in front of the camera")
    w_img, h_img = cam.image_size
    x_min, x_max = min(us), max(us)
    y_min, y_max = min(vs), max(vs)
    empty = x_max < 0 or y_max < 0 or x_min > w_img - 1 or y_min > h_img - 1
    return ROI(view_id=cam.view_id,
               x_min=float(np.clip(x_min, 0, w_img - 1)),
               y_min=float(np.clip(y_min, 0, h_img - 1)),
               x_max=float(np.clip(x_max, 0, w_img - 1)),
               y_max=float(np.clip(y_max, 0, h_img - 1)),
               partial=dropped > 0,
               empty=empty)


def roi_window(roi: ROI) -> tuple[int, int, int, int]:
    """Inclusive integer pixel window (r0, r1, c0, c1) covering the ROI."""
    c0 = int(math.floor(roi.x_min))
    c1 = int(math.ceil(roi.x_max))
    r0 = int(math.floor(roi.y_min))
    r1 = int(math.ceil(roi.y_max))
    return r0, r1, c0, c1


def roi_pool(feat: FeatureGrid, roi: ROI, output_shape: tuple[int, int]) -> FeatureGrid:
    """Classical ROI max pooling with integer floor/ceil bin edges.

    Partitions the ROI's integer pixel window into output_shape bins and
    takes the per-channel max of each bin. Pooling the whole grid to its
    own shape is the identity.
    """
    if roi.empty:
        raise EmptyROI("ROI does not intersect the image")
    if feat.frame != "image" or feat.view_id != roi.view_id:
        raise EmptyROI(f"feature grid view {feat.view_id} does not match ROI view {roi.view_id}")
    ph, pw = output_shape
    if ph <= 0 or pw <= 0:
        raise ValueError(f"output shape must be positive, got {output_shape}")
    r0, r1, c0, c1 = roi_window(roi)
    r1 = min(r1, feat.rows - 1)
    c1 = min(c1, feat.cols - 1)
    n_r = r1 - r0 + 1
    n_c = c1 - c0 + 1
    if n_r <= 0 or n_c <= 0:
        raise EmptyROI("ROI integer window is empty")
    out = np.empty((ph, pw, feat.channels))
    for i in range(ph):
        rs = r0 + int(math.floor(i * n_r / ph))
        re = r0 + max(int(math.ceil((i + 1) * n_r / ph)), int(math.floor(i * n_r / ph)) + 1)
        for j in range(pw):
            cs = c0 + int(math.floor(j * n_c / pw))
            ce = c0 + max(int(math.ceil((j + 1) * n_c / pw)), int(math.floor(j * n_c / pw)) + 1)
            out[i, j] = feat.data[rs:re, cs:ce].max(axis=(0, 1))
    return FeatureGrid(data=out, frame="image", view_id=roi.view_id)
