"""BEV boxes: anchors, offset codec, axis-aligned and rotated IoU, NMS.

Footprint convention, used for every box type in this package: ``w`` is
the extent along the box's local x axis (the yaw direction) and ``l`` the
extent along its local y axis. Axis-aligned boxes (BoxBEV, Anchor) have an
implicit yaw of 0, so ``w`` spans world x and ``l`` world y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bev import BEVGridSpec
from .errors import NonPositiveSize


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class BoxBEV:
    """Axis-aligned metric box on the ground raster, optional confidence."""

    cx: float
    cy: float
    w: float
    l: float
    score: float | None = None

    def __post_init__(self):
        if self.w <= 0 or self.l <= 0:
            raise NonPositiveSize(f"box sides must be positive, got w={self.w} l={self.l}")


@dataclass(frozen=True)
class Anchor:
    """Fixed-size grid-aligned reference box."""

    cx: float
    cy: float
    w: float
    l: float

    def __post_init__(self):
        if self.w <= 0 or self.l <= 0:
            raise NonPositiveSize(f"anchor sides must be positive, got w={self.w} l={self.l}")


@dataclass(frozen=True)
class OffsetBEV:
    """Faster-R-CNN offset parameterization between an anchor and a box."""

    tx: float
    ty: float
    tw: float
    tl: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tw, self.tl])


@dataclass(frozen=True)
class RotatedBoxBEV:
    """Yawed metric box; yaw is wrapped to (-pi, pi] on construction."""

    cx: float
    cy: float
    w: float
    l: float
    yaw: float

    def __post_init__(self):
        if self.w <= 0 or self.l <= 0:
            raise NonPositiveSize(f"box sides must be positive, got w={self.w} l={self.l}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def corners(self) -> np.ndarray:
        """(4, 2) corner array, counter-clockwise for yaw 0."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        hx, hy = self.w / 2.0, self.l / 2.0
        local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.cx, self.cy])


# default robot footprint; the source data does not fix anchor sizes
DEFAULT_ANCHOR_SIZE = (0.60, 0.45)
DEFAULT_NMS_THRESHOLD = 0.3


def generate_anchors(grid: BEVGridSpec,
                     anchor_size: tuple[float, float] = DEFAULT_ANCHOR_SIZE) -> list[Anchor]:
    """One anchor per BEV cell, centered on the cell, row-major order."""
    w, l = anchor_size
    if w <= 0 or l <= 0:
        raise NonPositiveSize(f"anchor size must be positive, got {anchor_size}")
    xs, ys = grid.cell_centers()
    return [Anchor(cx=float(x), cy=float(y), w=w, l=l)
            for x, y in zip(xs.ravel(), ys.ravel())]


def encode_offsets(anchor, gt) -> OffsetBEV:
    """tx=(x-xa)/wa, ty=(y-ya)/la, tw=log(w/wa), tl=log(l/la).

    Works for any pair of objects with cx, cy, w, l fields (BEV boxes in
    meters or per-view 2D boxes in pixels use the same codec).
    """
    if gt.w <= 0 or gt.l <= 0 or anchor.w <= 0 or anchor.l <= 0:
        raise NonPositiveSize("offset codec needs positive box sides")
    return OffsetBEV(tx=(gt.cx - anchor.cx) / anchor.w,
                     ty=(gt.cy - anchor.cy) / anchor.l,
                     tw=math.log(gt.w / anchor.w),
                     tl=math.log(gt.l / anchor.l))


def decode_offsets(anchor, off: OffsetBEV) -> BoxBEV:
    """Inverse of :func:`encode_offsets`."""
    return BoxBEV(cx=anchor.cx + off.tx * anchor.w,
                  cy=anchor.cy + off.ty * anchor.l,
                  w=anchor.w * math.exp(off.tw),
                  l=anchor.l * math.exp(off.tl))


def iou_axis_aligned(a, b) -> float:
    """IoU of two axis-aligned boxes with cx, cy, w, l fields."""
    ix = min(a.cx + a.w / 2, b.cx + b.w / 2) - max(a.cx - a.w / 2, b.cx - b.w / 2)
    iy = min(a.cy + a.l / 2, b.cy + b.l / 2) - max(a.cy - a.l / 2, b.cy - b.l / 2)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.l + b.w * b.l - inter
    return inter / union


def _clip_polygon(poly: np.ndarray, edge_a: np.ndarray, edge_b: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of poly against the half-plane left of a->b."""
    if len(poly) == 0:
        return poly
    d = edge_b - edge_a
    # signed area sign: keep points with cross(d, p - a) >= 0
    cross = d[0] * (poly[:, 1] - edge_a[1]) - d[1] * (poly[:, 0] - edge_a[0])
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        ci, cj = cross[i], cross[j]
        if ci >= 0:
            out.append(poly[i])
        if (ci > 0 and cj < 0) or (ci < 0 and cj > 0):
            t = ci / (ci - cj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def _shoelace(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def intersection_area_rotated(a: RotatedBoxBEV, b: RotatedBoxBEV) -> float:
    """Convex intersection area of two rotated boxes (polygon clipping)."""
    poly = a.corners()
    cb = b.corners()
    for i in range(4):
        poly = _clip_polygon(poly, cb[i], cb[(i + 1) % 4])
        if len(poly) == 0:
            return 0.0
    return _shoelace(poly)


def iou_rotated_bev(a: RotatedBoxBEV, b: RotatedBoxBEV) -> float:
    """Rotated-box IoU via Sutherland-Hodgman clipping + shoelace area."""
    inter = intersection_area_rotated(a, b)
    union = a.w * a.l + b.w * b.l - inter
    if union <= 0:
        return 0.0
    return min(inter / union, 1.0)


def nms(boxes: list, scores: list[float], overlap_metric, threshold: float) -> list[int]:
    """Greedy non-maximum suppression; returns kept indices.

    Boxes are visited in descending score order (ties: lower index first).
    A box is suppressed when its overlap with an already-kept box is
    strictly above ``threshold``.
    """
    if len(boxes) != len(scores):
        raise ValueError("boxes and scores must have equal length")
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        if all(overlap_metric(boxes[i], boxes[k]) <= threshold for k in kept):
            kept.append(i)
    return sorted(kept)


def label_anchors(anchors: list[Anchor], gt_boxes: list[BoxBEV],
                  pos_threshold: float = 0.7,
                  neg_threshold: float = 0.3) -> np.ndarray:
    """Positive/negative/ignore labels for the proposal stage.

    1 where the best IoU with any ground-truth box is greater than
    ``pos_threshold``, 0 where it is less than ``neg_threshold``,
    -1 in between. Defaults 0.7 / 0.3.
    """
    labels = np.full(len(anchors), -1, dtype=int)
    if not gt_boxes:
        labels[:] = 0
        return labels
    ious = np.array([[iou_axis_aligned(a, g) for g in gt_boxes] for a in anchors])
    best = ious.max(axis=1)
    labels[best < neg_threshold] = 0
    labels[best > pos_threshold] = 1
    return labels


def select_training_samples(ious: np.ndarray, iou_threshold: float = 0.5,
                            cap: int = 128) -> np.ndarray:
    """Indices of proposals with IoU >= threshold, best-first, capped.

    The orientation stage trains on at most ``cap`` proposals whose overlap
    with ground truth reaches ``iou_threshold`` (defaults 0.5 / 128).
    """
    ious = np.asarray(ious, dtype=float)
    eligible = np.flatnonzero(ious >= iou_threshold)
    ranked = eligible[np.lexsort((eligible, -ious[eligible]))]
    return ranked[:cap]
