"""Detection evaluation: matching, MODA/MODP, precision/recall, AP, AOS, OS.

Per frame, ground truth and detections are matched one-to-one by the
Hungarian algorithm, admitting only pairs within a ground-plane radius
(distance mode) or above a rotated-IoU threshold (IoU mode). Accumulated
over frames:

    MODA = 1 - (sum FN + sum FP) / sum GT
    MODP = mean over matches of (1 - min(d, r)/r)   [distance mode]
           mean over matches of IoU                 [IoU mode]

Average precision sweeps detections by descending confidence with greedy
rotated-IoU matching and interpolates the precision envelope at fixed
recall levels (11-point classic, 40-point behind a flag). AOS replaces
each true positive's unit contribution by (1 + cos(yaw error)) / 2, and OS
is the mean of that similarity over true positives alone, taken at the
same IoU threshold as the adjacent AP.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .boxes import RotatedBoxBEV, iou_rotated_bev, wrap_angle

_INVALID_COST = 1e9


@dataclass(frozen=True)
class AnnotatedObject:
    """Ground-truth object: position, yaw (wrapped to (-pi, pi]), (l, w, h) size."""

    x: float
    y: float
    yaw: float
    size: tuple[float, float, float] = (0.45, 0.60, 0.40)

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def footprint(self) -> RotatedBoxBEV:
        l, w, _ = self.size
        return RotatedBoxBEV(self.x, self.y, w, l, self.yaw)


@dataclass
class FrameAnnotations:
    frame_id: int
    objects: list[AnnotatedObject] = field(default_factory=list)


@dataclass(frozen=True)
class Detection:
    """Detected object; yaw may be None when orientation was not estimated."""

    x: float
    y: float
    confidence: float
    yaw: float | None = None
    size: tuple[float, float, float] = (0.45, 0.60, 0.40)

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")
        if self.yaw is not None:
            object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def footprint(self) -> RotatedBoxBEV:
        l, w, _ = self.size
        return RotatedBoxBEV(self.x, self.y, w, l, self.yaw or 0.0)


@dataclass
class DetectionSet:
    frame_id: int
    detections: list[Detection] = field(default_factory=list)


@dataclass
class MatchResult:
    """One frame's assignment: matched pairs plus leftover FPs and FNs."""

    frame_id: int
    pairs: list[tuple[int, int, float]]  # (gt index, det index, distance or IoU)
    fp: list[int]
    fn: list[int]
    n_gt: int
    n_det: int


def match_detections(gt: FrameAnnotations, det: DetectionSet,
                     mode: str = "distance", radius: float = 0.5,
                     iou_threshold: float = 0.5) -> MatchResult:
    """Optimal one-to-one assignment between one frame's GT and detections.

    Distance mode minimizes total ground-plane distance over pairs within
    ``radius``; IoU mode maximizes total rotated IoU over pairs at or above
    ``iou_threshold``. Unmatched detections are FPs, unmatched ground truth
    FNs. Ties resolve toward lower indices.
    """
    if gt.frame_id != det.frame_id:
        raise ValueError(f"frame mismatch: gt {gt.frame_id} vs det {det.frame_id}")
    n_gt, n_det = len(gt.objects), len(det.detections)
    if n_gt == 0 or n_det == 0:
        return MatchResult(gt.frame_id, [], list(range(n_det)),
                           list(range(n_gt)), n_gt, n_det)
    score = np.zeros((n_gt, n_det))
    if mode == "distance":
        gt_xy = np.array([[o.x, o.y] for o in gt.objects])
        det_xy = np.array([[d.x, d.y] for d in det.detections])
        score = np.linalg.norm(gt_xy[:, None, :] - det_xy[None, :, :], axis=2)
        valid = score <= radius
        cost = np.where(valid, score, _INVALID_COST)
    elif mode == "rotated_iou":
        for i, o in enumerate(gt.objects):
            fo = o.footprint()
            for j, d in enumerate(det.detections):
                score[i, j] = iou_rotated_bev(fo, d.footprint())
        valid = score >= iou_threshold
        cost = np.where(valid, 1.0 - score, _INVALID_COST)
    else:
        raise ValueError(f"unknown matching mode {mode!r}")
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(i), int(j), float(score[i, j]))
             for i, j in zip(rows, cols) if valid[i, j]]
    matched_gt = {i for i, _, _ in pairs}
    matched_det = {j for _, j, _ in pairs}
    return MatchResult(gt.frame_id, pairs,
                       [j for j in range(n_det) if j not in matched_det],
                       [i for i in range(n_gt) if i not in matched_gt],
                       n_gt, n_det)


def moda_modp(results: list[MatchResult], radius: float = 0.5,
              mode: str = "distance") -> tuple[float, float, list[str]]:
    """Accumulated MODA and MODP over frames (with degenerate-input flags)."""
    flags = []
    total_gt = sum(r.n_gt for r in results)
    total_fp = sum(len(r.fp) for r in results)
    total_fn = sum(len(r.fn) for r in results)
    if total_gt == 0:
        flags.append("moda_undefined_no_ground_truth")
        moda = 1.0 if total_fp == 0 else 0.0
    else:
        moda = 1.0 - (total_fn + total_fp) / total_gt
    scores = []
    for r in results:
        for _, _, s in r.pairs:
            scores.append(1.0 - min(s, radius) / radius if mode == "distance" else s)
    if scores:
        modp = float(np.mean(scores))
    else:
        flags.append("modp_undefined_no_matches")
        modp = 0.0
    return moda, modp, flags


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float, list[str]]:
    """precision = TP/(TP+FP), recall = TP/(TP+FN); 0/0 reports 1.0 flagged."""
    flags = []
    if tp + fp == 0:
        flags.append("precision_undefined_no_detections")
        precision = 1.0
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        flags.append("recall_undefined_no_ground_truth")
        recall = 1.0
    else:
        recall = tp / (tp + fn)
    return precision, recall, flags


def yaw_similarity(gt_yaw: float, det_yaw: float | None) -> float:
    """(1 + cos(yaw error)) / 2; a missing detection yaw scores 0."""
    if det_yaw is None:
        return 0.0
    return (1.0 + math.cos(wrap_angle(det_yaw - gt_yaw))) / 2.0


def _confidence_sweep(gt_frames, det_frames, iou_threshold):
    """Greedy confidence-descending sweep shared by AP, AOS, and OS.

    Returns (tp flags, orientation similarities, number of ground truth).
    """
    det_by_frame = {d.frame_id: d for d in det_frames}
    order = []
    for fi, gt in enumerate(gt_frames):
        ds = det_by_frame.get(gt.frame_id)
        if ds is None:
            continue
        for j, d in enumerate(ds.detections):
            order.append((-d.confidence, gt.frame_id, j, fi))
    order.sort()
    gt_boxes = [[o.footprint() for o in g.objects] for g in gt_frames]
    taken = [np.zeros(len(g.objects), dtype=bool) for g in gt_frames]
    tp = np.zeros(len(order), dtype=bool)
    sim = np.zeros(len(order))
    for k, (_, frame_id, j, fi) in enumerate(order):
        det = det_by_frame[frame_id].detections[j]
        box = det.footprint()
        best_iou, best_i = 0.0, -1
        for i, gbox in enumerate(gt_boxes[fi]):
            if taken[fi][i]:
                continue
            iou = iou_rotated_bev(gbox, box)
            if iou > best_iou:
                best_iou, best_i = iou, i
        if best_i >= 0 and best_iou >= iou_threshold:
            taken[fi][best_i] = True
            tp[k] = True
            sim[k] = yaw_similarity(gt_frames[fi].objects[best_i].yaw, det.yaw)
    n_gt = sum(len(g.objects) for g in gt_frames)
    return tp, sim, n_gt


def _recall_levels(n_points: int) -> np.ndarray:
    if n_points == 11:
        return np.linspace(0.0, 1.0, 11)
    return np.arange(1, n_points + 1) / n_points


def _interpolated_average(values: np.ndarray, recalls: np.ndarray,
                          n_points: int) -> float:
    """Mean over recall levels of the max value at recall >= level."""
    total = 0.0
    for r in _recall_levels(n_points):
        mask = recalls >= r - 1e-12
        total += float(values[mask].max()) if np.any(mask) else 0.0
    return total / len(_recall_levels(n_points))


def average_precision_3d(gt_frames, det_frames, iou_threshold: float,
                         n_points: int = 11) -> float:
    """Interpolated AP with rotated-box overlap at the given threshold."""
    tp, _, n_gt = _confidence_sweep(gt_frames, det_frames, iou_threshold)
    if n_gt == 0 or tp.size == 0:
        return 0.0
    cum_tp = np.cumsum(tp)
    ranks = np.arange(1, tp.size + 1)
    precision = cum_tp / ranks
    recall = cum_tp / n_gt
    return _interpolated_average(precision, recall, n_points)


def aos(gt_frames, det_frames, iou_threshold: float, n_points: int = 11) -> float:
    """Average orientation similarity: AP with TP contributions weighted
    by (1 + cos(yaw error)) / 2 and FPs contributing 0."""
    tp, sim, n_gt = _confidence_sweep(gt_frames, det_frames, iou_threshold)
    if n_gt == 0 or tp.size == 0:
        return 0.0
    cum_sim = np.cumsum(sim)
    ranks = np.arange(1, tp.size + 1)
    s = cum_sim / ranks
    recall = np.cumsum(tp) / n_gt
    return _interpolated_average(s, recall, n_points)


def orientation_score(gt_frames, det_frames, iou_threshold: float) -> float:
    """Mean yaw similarity over true positives at the given IoU threshold."""
    tp, sim, _ = _confidence_sweep(gt_frames, det_frames, iou_threshold)
    if not np.any(tp):
        return 0.0
    return float(np.mean(sim[tp]))


@dataclass
class MetricsReport:
    moda: float
    modp: float
    precision: float
    recall: float
    ap3d: dict[float, float]
    aos: dict[float, float]
    os: dict[float, float]
    counts: dict[str, int]
    per_frame: list[dict]
    flags: list[str]
    params: dict

    def to_dict(self) -> dict:
        return {
            "moda": self.moda,
            "modp": self.modp,
            "precision": self.precision,
            "recall": self.recall,
            "ap3d": {f"{t:g}": v for t, v in self.ap3d.items()},
            "aos": {f"{t:g}": v for t, v in self.aos.items()},
            "os": {f"{t:g}": v for t, v in self.os.items()},
            "counts": self.counts,
            "per_frame": self.per_frame,
            "flags": self.flags,
            "params": self.params,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def format_table(self) -> str:
        """Aligned text table in MODA, MODP, Prec., Recall column order."""
        header = f"{'MODA':>8} {'MODP':>8} {'Prec.':>8} {'Recall':>8}"
        row = (f"{100 * self.moda:>8.1f} {100 * self.modp:>8.1f} "
               f"{100 * self.precision:>8.1f} {100 * self.recall:>8.1f}")
        lines = [header, row]
        if self.ap3d:
            lines.append("")
            lines.append(f"{'IoU':>8} {'AP3D':>8} {'AOS':>8} {'OS':>8}")
            for t in sorted(self.ap3d):
                lines.append(f"{t:>8.2f} {100 * self.ap3d[t]:>8.1f} "
                             f"{100 * self.aos[t]:>8.1f} {self.os[t]:>8.2f}")
        return "\n".join(lines)


def evaluate(gt_frames: list[FrameAnnotations], det_frames: list[DetectionSet],
             radius: float = 0.5, iou_thresholds=(0.25, 0.5),
             modp_mode: str = "distance", ap_points: int = 11) -> MetricsReport:
    """Full evaluation over aligned frame lists.

    Frames are aligned by frame_id; a detection frame without ground truth
    still contributes its false positives.
    """
    det_by_frame = {d.frame_id: d for d in det_frames}
    gt_ids = {g.frame_id for g in gt_frames}
    all_gt = list(gt_frames)
    for d in det_frames:
        if d.frame_id not in gt_ids:
            all_gt.append(FrameAnnotations(frame_id=d.frame_id, objects=[]))
    all_gt.sort(key=lambda g: g.frame_id)

    results = []
    for gt in all_gt:
        det = det_by_frame.get(gt.frame_id, DetectionSet(frame_id=gt.frame_id))
        kwargs = ({"radius": radius} if modp_mode == "distance"
                  else {"iou_threshold": min(iou_thresholds)})
        results.append(match_detections(
            gt, det, mode="distance" if modp_mode == "distance" else "rotated_iou",
            **kwargs))

    moda, modp, flags = moda_modp(results, radius=radius, mode=modp_mode)
    tp = sum(len(r.pairs) for r in results)
    fp = sum(len(r.fp) for r in results)
    fn = sum(len(r.fn) for r in results)
    precision, recall, pr_flags = precision_recall(tp, fp, fn)
    flags.extend(pr_flags)

    ap_by_t, aos_by_t, os_by_t = {}, {}, {}
    for t in iou_thresholds:
        ap_by_t[t] = average_precision_3d(all_gt, det_frames, t, ap_points)
        aos_by_t[t] = aos(all_gt, det_frames, t, ap_points)
        os_by_t[t] = orientation_score(all_gt, det_frames, t)

    per_frame = [{"frame_id": r.frame_id, "tp": len(r.pairs),
                  "fp": len(r.fp), "fn": len(r.fn)} for r in results]
    counts = {"tp": tp, "fp": fp, "fn": fn,
              "gt": sum(r.n_gt for r in results),
              "det": sum(r.n_det for r in results)}
    params = {"radius": radius, "modp_mode": modp_mode,
              "iou_thresholds": list(iou_thresholds), "ap_points": ap_points}
    return MetricsReport(moda=moda, modp=modp, precision=precision,
                         recall=recall, ap3d=ap_by_t, aos=aos_by_t,
                         os=os_by_t, counts=counts, per_frame=per_frame,
                         flags=flags, params=params)
