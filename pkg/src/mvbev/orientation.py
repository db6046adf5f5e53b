"""Line-of-sight-relative yaw and multi-bin orientation encoding.

Global yaw labels are ambiguous across viewpoints: the same yaw looks
different depending on the viewing ray. The fix is to express yaw relative
to the ray azimuth (the ground-plane bearing from the camera to the
object), so the label depends only on how the object presents itself to
that camera. The relative angle is then classified into N equal intervals
plus a within-interval offset:

    interval i covers [2*pi/N * (i-1), 2*pi/N * i),  i in 1..N
    offset   o_i = alpha - (pi/N) * (2*i - 1)        (bin-center residual)

Bin indices are 1-based to match the interval definition; probability and
offset arrays in :class:`OrientationBins` store bin i at position i-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import RotatedBoxBEV, iou_rotated_bev, nms, wrap_angle
from .errors import BadBinCount, DegenerateRay, MalformedDistribution
from .geometry import CameraModel, WorldPoint

TWO_PI = 2.0 * math.pi


def wrap_2pi(a: float) -> float:
    """Wrap to [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0 else a


@dataclass(frozen=True)
class LocalYaw:
    """Yaw relative to the camera->object viewing-ray azimuth, in [0, 2π)."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap_2pi(self.alpha))


@dataclass
class OrientationBins:
    """Multi-bin orientation estimate: distribution + per-bin offsets."""

    n_bins: int
    probs: np.ndarray
    offsets: np.ndarray
    confidence: float = 1.0

    def __post_init__(self):
        if self.n_bins < 2:
            raise BadBinCount(f"need at least 2 bins, got {self.n_bins}")
        self.probs = np.asarray(self.probs, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float)
        if self.probs.shape != (self.n_bins,) or self.offsets.shape != (self.n_bins,):
            raise MalformedDistribution(
                f"probs/offsets must have length {self.n_bins}")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-9:
            raise MalformedDistribution("probs must be a distribution")

    @classmethod
    def from_label(cls, alpha: LocalYaw, n: int, confidence: float = 1.0):
        """One-hot label bins for a known relative yaw."""
        i, off = encode_multibin(alpha, n)
        probs = np.zeros(n)
        probs[i - 1] = 1.0
        offsets = np.zeros(n)
        offsets[i - 1] = off
        return cls(n_bins=n, probs=probs, offsets=offsets, confidence=confidence)


def ray_azimuth(cam: CameraModel, pos: WorldPoint) -> float:
    """Ground-plane bearing of the camera->object ray, atan2 convention."""
    center = cam.center
    dx = pos.x - center[0]
    dy = pos.y - center[1]
    if math.hypot(dx, dy) < 1e-12:
        raise DegenerateRay("object sits on the camera's ground footprint")
    return math.atan2(dy, dx)


def global_to_local_yaw(cam: CameraModel, pos: WorldPoint, beta: float) -> LocalYaw:
    """Express global yaw ``beta`` relative to the viewing-ray azimuth."""
    return LocalYaw(beta - ray_azimuth(cam, pos))


def local_to_global_yaw(cam: CameraModel, pos: WorldPoint, alpha: LocalYaw) -> float:
    """Inverse of :func:`global_to_local_yaw`; returns yaw in (-pi, pi]."""
    return wrap_angle(alpha.alpha + ray_azimuth(cam, pos))


def bin_center(i: int, n: int) -> float:
    """Center angle of 1-based bin i: (pi/N) * (2*i - 1)."""
    return math.pi / n * (2 * i - 1)


def encode_multibin(alpha: LocalYaw, n: int) -> tuple[int, float]:
    """(1-based bin index, bin-center offset) for a relative yaw.

    Intervals are half-open [lower, upper) so boundary angles assign
    uniquely; the offset satisfies |o| <= pi/N and
    alpha = bin_center(i) + o (mod 2*pi).
    """
    if n < 2:
        raise BadBinCount(f"need at least 2 bins, got {n}")
    a = wrap_2pi(alpha.alpha)
    i = min(int(a / (TWO_PI / n)) + 1, n)
    return i, a - bin_center(i, n)


def decode_multibin(bins: OrientationBins) -> LocalYaw:
    """Relative yaw from the argmax bin plus its offset.

    Ties on the probabilities resolve to the lowest bin index.
    """
    if not np.all(np.isfinite(bins.probs)):
        raise MalformedDistribution("probs must be finite")
    k = int(np.argmax(bins.probs))
    return LocalYaw(bin_center(k + 1, bins.n_bins) + float(bins.offsets[k]))


def fuse_multiview_orientations(
        candidates: list[tuple[RotatedBoxBEV, int, float]],
        nms_threshold: float = 0.3,
        return_indices: bool = False):
    """Confidence-ranked NMS over per-view oriented boxes.

    Each candidate is (box in global yaw, view_id, confidence). Within a
    surviving cluster the highest-confidence candidate supplies both the
    position and the yaw (circular averaging across views would reintroduce
    ambiguity near ±pi).
    """
    boxes = [c[0] for c in candidates]
    confidences = [c[2] for c in candidates]
    kept = nms(boxes, confidences, iou_rotated_bev, nms_threshold)
    result = [boxes[i] for i in kept]
    if return_indices:
        return result, kept
    return result
