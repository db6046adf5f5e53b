"""Training objectives for the proposal and orientation stages.

Pure scalar functions over prediction/label batches with analytic
gradients, so the objectives can be verified by finite differences
without any training machinery. Confidence terms consume logits and use a
stable log-softmax; the orientation term is 1 - cos(delta), shifted so the
minimum is 0 (gradients unchanged).

Position-proposal loss over anchors i (labels p in {0,1}), with positives
gating the offset terms:

    L = 1/N_conf * sum_i CE(conf_i)
      + lam_bev / N_val * sum_{p_i=1} smooth_l1(bev_i)
      + lam_2d  / N_val * sum_{p_i=1} sum_v smooth_l1(view_v_i)

Orientation loss per view v, positives gating the bin and offset terms:

    L = sum_v [ 1/N^v_conf * sum_i CE(conf^v_i)
              + 1/N^v_val  * sum_{p=1} CE(bins^v_i)
              + lam_ori / N^v_val * sum_{p=1} (1 - cos(o^v_i - o_hat^v_i)) ]

Default weights: lam_bev = 3, lam_2d = 1, lam_ori = 0.4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadLabel, LengthMismatch, NoPositivesWithOffsets

DEFAULT_LAMBDA_BEV = 3.0
DEFAULT_LAMBDA_2D = 1.0
DEFAULT_LAMBDA_ORI = 0.4


def smooth_l1(pred, gt) -> float:
    """Sum over components of 0.5*d^2 (|d|<1) else |d|-0.5, d = pred-gt."""
    pred = np.asarray(pred, dtype=float).ravel()
    gt = np.asarray(gt, dtype=float).ravel()
    if pred.shape != gt.shape:
        raise LengthMismatch(f"lengths differ: {pred.shape} vs {gt.shape}")
    d = pred - gt
    return float(np.sum(np.where(np.abs(d) < 1.0, 0.5 * d * d, np.abs(d) - 0.5)))


def smooth_l1_grad(pred, gt) -> np.ndarray:
    """d/d_pred of :func:`smooth_l1`: d inside the quadratic zone, sign(d) outside."""
    pred = np.asarray(pred, dtype=float).ravel()
    gt = np.asarray(gt, dtype=float).ravel()
    if pred.shape != gt.shape:
        raise LengthMismatch(f"lengths differ: {pred.shape} vs {gt.shape}")
    d = pred - gt
    return np.where(np.abs(d) < 1.0, d, np.sign(d))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    m = logits.max()
    shifted = logits - m
    return shifted - np.log(np.sum(np.exp(shifted)))


def softmax_ce(logits, label_index: int) -> float:
    """-log softmax(logits)[label]."""
    logits = np.asarray(logits, dtype=float).ravel()
    if logits.size < 2:
        raise LengthMismatch("softmax cross-entropy needs at least 2 logits")
    if not 0 <= label_index < logits.size:
        raise BadLabel(f"label {label_index} out of range for {logits.size} classes")
    return float(-log_softmax(logits)[label_index])


def softmax_ce_grad(logits, label_index: int) -> np.ndarray:
    """d/d_logits of :func:`softmax_ce`: softmax - onehot."""
    logits = np.asarray(logits, dtype=float).ravel()
    if not 0 <= label_index < logits.size:
        raise BadLabel(f"label {label_index} out of range for {logits.size} classes")
    p = np.exp(log_softmax(logits))
    p[label_index] -= 1.0
    return p


def orientation_cosine_loss(o_pred, o_gt) -> float:
    """Mean over entries of 1 - cos(pred - gt); in [0, 2], periodic in 2*pi."""
    o_pred = np.asarray(o_pred, dtype=float).ravel()
    o_gt = np.asarray(o_gt, dtype=float).ravel()
    if o_pred.shape != o_gt.shape:
        raise LengthMismatch(f"lengths differ: {o_pred.shape} vs {o_gt.shape}")
    if o_pred.size == 0:
        return 0.0
    return float(np.mean(1.0 - np.cos(o_pred - o_gt)))


def orientation_cosine_grad(o_pred, o_gt) -> np.ndarray:
    """d/d_pred of :func:`orientation_cosine_loss`: sin(delta)/n."""
    o_pred = np.asarray(o_pred, dtype=float).ravel()
    o_gt = np.asarray(o_gt, dtype=float).ravel()
    if o_pred.shape != o_gt.shape:
        raise LengthMismatch(f"lengths differ: {o_pred.shape} vs {o_gt.shape}")
    if o_pred.size == 0:
        return np.zeros(0)
    return np.sin(o_pred - o_gt) / o_pred.size


@dataclass
class PPNBatch:
    """Position-proposal batch.

    labels: (N,) int in {0, 1}; conf_logits: (N, 2), class 1 = object.
    bev offsets: (N, 4) or None; per-view 2D offsets: (V, N, 4) or None.
    Offset rows are consumed only where labels == 1.
    """

    labels: np.ndarray
    conf_logits: np.ndarray
    bev_gt: np.ndarray | None = None
    bev_pred: np.ndarray | None = None
    view_gt: np.ndarray | None = None
    view_pred: np.ndarray | None = None
    lam_bev: float = DEFAULT_LAMBDA_BEV
    lam_2d: float = DEFAULT_LAMBDA_2D

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int).ravel()
        self.conf_logits = np.asarray(self.conf_logits, dtype=float)
        n = self.labels.size
        if self.conf_logits.shape != (n, 2):
            raise LengthMismatch(
                f"conf_logits must be ({n}, 2), got {self.conf_logits.shape}")
        for name in ("bev_gt", "bev_pred"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != (n, 4):
                    raise LengthMismatch(f"{name} must be ({n}, 4), got {arr.shape}")
                setattr(self, name, arr)
        if (self.bev_gt is None) != (self.bev_pred is None):
            raise LengthMismatch("bev_gt and bev_pred must be supplied together")
        for name in ("view_gt", "view_pred"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.ndim != 3 or arr.shape[1:] != (n, 4):
                    raise LengthMismatch(f"{name} must be (V, {n}, 4), got {arr.shape}")
                setattr(self, name, arr)
        if (self.view_gt is None) != (self.view_pred is None):
            raise LengthMismatch("view_gt and view_pred must be supplied together")
        has_offsets = self.bev_pred is not None or self.view_pred is not None
        if has_offsets and int(self.labels.sum()) == 0:
            raise NoPositivesWithOffsets(
                "offset terms supplied but the batch has no positive anchors")

    @property
    def n_conf(self) -> int:
        return self.labels.size

    @property
    def n_val(self) -> int:
        return int(self.labels.sum())


def ppn_loss(batch: PPNBatch) -> float:
    """Confidence + gated BEV-offset + gated per-view 2D-offset loss."""
    total = sum(softmax_ce(batch.conf_logits[i], int(batch.labels[i]))
                for i in range(batch.n_conf)) / batch.n_conf
    positives = np.flatnonzero(batch.labels == 1)
    if batch.bev_pred is not None:
        off = sum(smooth_l1(batch.bev_pred[i], batch.bev_gt[i]) for i in positives)
        total += batch.lam_bev * off / batch.n_val
    if batch.view_pred is not None:
        off = sum(smooth_l1(batch.view_pred[v, i], batch.view_gt[v, i])
                  for v in range(batch.view_pred.shape[0]) for i in positives)
        total += batch.lam_2d * off / batch.n_val
    return float(total)


def ppn_loss_grads(batch: PPNBatch) -> dict[str, np.ndarray]:
    """Analytic gradients of :func:`ppn_loss` w.r.t. every prediction input."""
    grads: dict[str, np.ndarray] = {}
    g_conf = np.zeros_like(batch.conf_logits)
    for i in range(batch.n_conf):
        g_conf[i] = softmax_ce_grad(batch.conf_logits[i], int(batch.labels[i]))
    grads["conf_logits"] = g_conf / batch.n_conf
    positives = np.flatnonzero(batch.labels == 1)
    if batch.bev_pred is not None:
        g = np.zeros_like(batch.bev_pred)
        for i in positives:
            g[i] = smooth_l1_grad(batch.bev_pred[i], batch.bev_gt[i])
        grads["bev_pred"] = batch.lam_bev * g / batch.n_val
    if batch.view_pred is not None:
        g = np.zeros_like(batch.view_pred)
        for v in range(batch.view_pred.shape[0]):
            for i in positives:
                g[v, i] = smooth_l1_grad(batch.view_pred[v, i], batch.view_gt[v, i])
        grads["view_pred"] = batch.lam_2d * g / batch.n_val
    return grads


@dataclass
class MBONViewBatch:
    """Per-view orientation batch.

    labels: (M,) in {0, 1}; conf_logits: (M, 2); bin_labels: one-hot
    (M, N); bin_logits: (M, N); offsets: (M,). Bin and offset entries are
    consumed only where labels == 1.
    """

    labels: np.ndarray
    conf_logits: np.ndarray
    bin_labels: np.ndarray
    bin_logits: np.ndarray
    offset_gt: np.ndarray
    offset_pred: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int).ravel()
        m = self.labels.size
        self.conf_logits = np.asarray(self.conf_logits, dtype=float)
        self.bin_labels = np.asarray(self.bin_labels, dtype=float)
        self.bin_logits = np.asarray(self.bin_logits, dtype=float)
        self.offset_gt = np.asarray(self.offset_gt, dtype=float).ravel()
        self.offset_pred = np.asarray(self.offset_pred, dtype=float).ravel()
        if self.conf_logits.shape != (m, 2):
            raise LengthMismatch(f"conf_logits must be ({m}, 2)")
        if self.bin_logits.ndim != 2 or self.bin_logits.shape[0] != m:
            raise LengthMismatch(f"bin_logits must be ({m}, N)")
        if self.bin_labels.shape != self.bin_logits.shape:
            raise LengthMismatch("bin_labels must match bin_logits shape")
        if self.offset_gt.shape != (m,) or self.offset_pred.shape != (m,):
            raise LengthMismatch(f"offsets must be ({m},)")
        rows = self.bin_labels[self.labels == 1]
        if rows.size and not np.allclose(rows.sum(axis=1), 1.0, atol=1e-9):
            raise BadLabel("bin labels of positives must be one-hot")

    @property
    def n_conf(self) -> int:
        return self.labels.size

    @property
    def n_val(self) -> int:
        return int(self.labels.sum())


@dataclass
class MBONBatch:
    """Multi-view orientation batch: one :class:`MBONViewBatch` per view."""

    views: list[MBONViewBatch]
    lam_ori: float = DEFAULT_LAMBDA_ORI

    def __post_init__(self):
        if not self.views:
            raise LengthMismatch("orientation batch needs at least one view")
        for v in self.views:
            if v.n_val == 0:
                raise NoPositivesWithOffsets(
                    "every view needs at least one positive box")


def mbon_loss(batch: MBONBatch) -> float:
    """Per-view confidence + gated bin classification + gated cosine offset."""
    total = 0.0
    for view in batch.views:
        total += sum(softmax_ce(view.conf_logits[i], int(view.labels[i]))
                     for i in range(view.n_conf)) / view.n_conf
        positives = np.flatnonzero(view.labels == 1)
        cls = sum(softmax_ce(view.bin_logits[i], int(np.argmax(view.bin_labels[i])))
                  for i in positives)
        total += cls / view.n_val
        deltas = orientation_cosine_loss(view.offset_pred[positives],
                                         view.offset_gt[positives])
        total += batch.lam_ori * deltas
    return float(total)


def mbon_loss_grads(batch: MBONBatch) -> list[dict[str, np.ndarray]]:
    """Analytic gradients of :func:`mbon_loss`, one mapping per view."""
    out = []
    for view in batch.views:
        g_conf = np.zeros_like(view.conf_logits)
        for i in range(view.n_conf):
            g_conf[i] = softmax_ce_grad(view.conf_logits[i], int(view.labels[i]))
        g_conf /= view.n_conf
        positives = np.flatnonzero(view.labels == 1)
        g_bins = np.zeros_like(view.bin_logits)
        for i in positives:
            g_bins[i] = softmax_ce_grad(view.bin_logits[i],
                                        int(np.argmax(view.bin_labels[i])))
        g_bins /= view.n_val
        g_off = np.zeros_like(view.offset_pred)
        g_off[positives] = batch.lam_ori * orientation_cosine_grad(
            view.offset_pred[positives], view.offset_gt[positives])
        out.append({"conf_logits": g_conf, "bin_logits": g_bins,
                    "offset_pred": g_off})
    return out


def finite_difference_check(loss_fn, arrays: dict[str, np.ndarray],
                            analytic: dict[str, np.ndarray],
                            h: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    ``loss_fn`` re-evaluates the loss from the (mutated) arrays; the
    finite-difference probe never reads the analytic gradients, so it stays
    an independent oracle for them.
    """
    worst = 0.0
    for name, grad in analytic.items():
        arr = arrays[name]
        flat = arr.ravel()
        gflat = np.asarray(grad).ravel()
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = loss_fn()
            flat[k] = orig - h
            down = loss_fn()
            flat[k] = orig
            fd = (up - down) / (2.0 * h)
            scale = max(abs(fd), abs(gflat[k]), 1.0)
            worst = max(worst, abs(fd - gflat[k]) / scale)
    return worst


def _random_ppn_batch(rng, n=4, views=2) -> PPNBatch:
    labels = np.zeros(n, dtype=int)
    labels[rng.integers(0, n)] = 1
    labels |= rng.integers(0, 2, size=n)
    while True:
        bev_gt = rng.uniform(-0.8, 0.8, size=(n, 4))
        bev_pred = rng.uniform(-0.8, 0.8, size=(n, 4))
        v_gt = rng.uniform(-0.8, 0.8, size=(views, n, 4))
        v_pred = rng.uniform(-0.8, 0.8, size=(views, n, 4))
        ds = np.concatenate([(bev_pred - bev_gt).ravel(), (v_pred - v_gt).ravel()])
        if np.all(np.abs(np.abs(ds) - 1.0) > 0.05):
            return PPNBatch(labels=labels,
                            conf_logits=rng.uniform(-2, 2, size=(n, 2)),
                            bev_gt=bev_gt, bev_pred=bev_pred,
                            view_gt=v_gt, view_pred=v_pred)


def _random_mbon_batch(rng, n_views=2, m=3, n_bins=8) -> MBONBatch:
    views = []
    for _ in range(n_views):
        labels = np.zeros(m, dtype=int)
        labels[rng.integers(0, m)] = 1
        labels |= rng.integers(0, 2, size=m)
        bin_labels = np.zeros((m, n_bins))
        bin_labels[np.arange(m), rng.integers(0, n_bins, size=m)] = 1.0
        while True:
            off_gt = rng.uniform(-1.5, 1.5, size=m)
            off_pred = rng.uniform(-1.5, 1.5, size=m)
            if np.all(np.abs(np.sin(off_pred - off_gt)) > 0.05):
                break
        views.append(MBONViewBatch(labels=labels,
                                   conf_logits=rng.uniform(-2, 2, size=(m, 2)),
                                   bin_labels=bin_labels,
                                   bin_logits=rng.uniform(-2, 2, size=(m, n_bins)),
                                   offset_gt=off_gt, offset_pred=off_pred))
    return MBONBatch(views=views)


def gradient_check_suite(seed: int = 0, n_points: int = 100) -> dict[str, float]:
    """Finite-difference audit of every loss: max relative error per loss.

    Random points avoid the smooth-L1 kink |d| = 1 and the cosine
    stationary points, where one-sided behavior makes the probe undefined.
    """
    rng = np.random.default_rng(seed)
    worst = {}

    acc = 0.0
    for _ in range(n_points):
        while True:
            pred = rng.uniform(-3, 3, size=4)
            gt = rng.uniform(-3, 3, size=4)
            if np.all(np.abs(np.abs(pred - gt) - 1.0) > 0.05):
                break
        acc = max(acc, finite_difference_check(
            lambda: smooth_l1(pred, gt), {"pred": pred},
            {"pred": smooth_l1_grad(pred, gt)}))
    worst["smooth_l1"] = acc

    acc = 0.0
    for _ in range(n_points):
        logits = rng.uniform(-3, 3, size=5)
        label = int(rng.integers(0, 5))
        acc = max(acc, finite_difference_check(
            lambda: softmax_ce(logits, label), {"logits": logits},
            {"logits": softmax_ce_grad(logits, label)}))
    worst["softmax_ce"] = acc

    acc = 0.0
    for _ in range(n_points):
        while True:
            pred = rng.uniform(-3, 3, size=3)
            gt = rng.uniform(-3, 3, size=3)
            if np.all(np.abs(np.sin(pred - gt)) > 0.05):
                break
        acc = max(acc, finite_difference_check(
            lambda: orientation_cosine_loss(pred, gt), {"pred": pred},
            {"pred": orientation_cosine_grad(pred, gt)}))
    worst["orientation_cosine"] = acc

    acc = 0.0
    for _ in range(n_points):
        batch = _random_ppn_batch(rng)
        acc = max(acc, finite_difference_check(
            lambda: ppn_loss(batch),
            {"conf_logits": batch.conf_logits, "bev_pred": batch.bev_pred,
             "view_pred": batch.view_pred},
            ppn_loss_grads(batch)))
    worst["ppn_loss"] = acc

    acc = 0.0
    for _ in range(n_points):
        batch = _random_mbon_batch(rng)
        for view, grads in zip(batch.views, mbon_loss_grads(batch)):
            acc = max(acc, finite_difference_check(
                lambda: mbon_loss(batch),
                {"conf_logits": view.conf_logits, "bin_logits": view.bin_logits,
                 "offset_pred": view.offset_pred},
                grads))
    worst["mbon_loss"] = acc
    return worst
