import math

import numpy as np
import pytest

from mvbev.errors import BadLabel, LengthMismatch, NoPositivesWithOffsets
from mvbev.losses import (
    MBONBatch,
    MBONViewBatch,
    PPNBatch,
    finite_difference_check,
    mbon_loss,
    mbon_loss_grads,
    orientation_cosine_grad,
    orientation_cosine_loss,
    ppn_loss,
    ppn_loss_grads,
    smooth_l1,
    smooth_l1_grad,
    softmax_ce,
    softmax_ce_grad,
)

LN2 = math.log(2.0)


class TestSmoothL1:
    def test_zero(self):
        assert smooth_l1([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_quadratic_zone(self):
        assert smooth_l1([0.5], [0.0]) == pytest.approx(0.125, abs=1e-15)

    def test_linear_zone(self):
        assert smooth_l1([2.0], [0.0]) == pytest.approx(1.5, abs=1e-15)

    def test_sums_components(self):
        assert smooth_l1([0.5, 2.0], [0.0, 0.0]) == pytest.approx(1.625, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            smooth_l1([1.0], [1.0, 2.0])


class TestSoftmaxCE:
    def test_uniform(self):
        assert softmax_ce([0.0, 0.0], 0) == pytest.approx(LN2, abs=1e-12)

    def test_saturated(self):
        assert softmax_ce([10.0, -10.0], 0) < 1e-8

    def test_hand_value(self):
        assert softmax_ce([1.0, 0.0], 1) == pytest.approx(math.log(1 + math.e), abs=1e-12)

    def test_bad_label(self):
        with pytest.raises(BadLabel):
            softmax_ce([0.0, 0.0], 2)

    def test_needs_two_logits(self):
        with pytest.raises(LengthMismatch):
            softmax_ce([0.0], 0)


class TestOrientationCosine:
    def test_zero_error(self):
        assert orientation_cosine_loss([0.3], [0.3]) == 0.0

    def test_antipodal(self):
        assert orientation_cosine_loss([math.pi], [0.0]) == pytest.approx(2.0, abs=1e-12)

    def test_sixty_degrees(self):
        assert orientation_cosine_loss([math.pi / 3], [0.0]) == pytest.approx(0.5, abs=1e-12)

    def test_periodic(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            o = rng.uniform(-3, 3)
            o2 = rng.uniform(-3, 3)
            base = orientation_cosine_loss([o], [o2])
            shifted = orientation_cosine_loss([o + 2 * math.pi], [o2])
            # equal up to one ulp of the angle addition
            assert shifted == pytest.approx(base, abs=1e-12)

    def test_mean_over_entries(self):
        loss = orientation_cosine_loss([0.0, math.pi], [0.0, 0.0])
        assert loss == pytest.approx(1.0, abs=1e-12)


def make_ppn(rng, n=5, views=2, with_offsets=True):
    labels = np.zeros(n, dtype=int)
    labels[rng.integers(0, n)] = 1
    labels |= rng.integers(0, 2, size=n)
    conf = rng.uniform(-2, 2, size=(n, 2))
    kwargs = {}
    if with_offsets:
        # keep every smooth-L1 component away from the |d| = 1 kink
        while True:
            bev_gt = rng.uniform(-0.8, 0.8, size=(n, 4))
            bev_pred = rng.uniform(-0.8, 0.8, size=(n, 4))
            v_gt = rng.uniform(-0.8, 0.8, size=(views, n, 4))
            v_pred = rng.uniform(-0.8, 0.8, size=(views, n, 4))
            ds = np.concatenate([(bev_pred - bev_gt).ravel(), (v_pred - v_gt).ravel()])
            if np.all(np.abs(np.abs(ds) - 1.0) > 0.05):
                break
        kwargs = dict(bev_gt=bev_gt, bev_pred=bev_pred, view_gt=v_gt, view_pred=v_pred)
    return PPNBatch(labels=labels, conf_logits=conf, **kwargs)


def make_mbon(rng, n_views=2, m=4, n_bins=8):
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
            d = off_pred - off_gt
            # keep away from the cosine stationary points sin(d) = 0
            if np.all(np.abs(np.sin(d)) > 0.05):
                break
        views.append(MBONViewBatch(
            labels=labels,
            conf_logits=rng.uniform(-2, 2, size=(m, 2)),
            bin_labels=bin_labels,
            bin_logits=rng.uniform(-2, 2, size=(m, n_bins)),
            offset_gt=off_gt,
            offset_pred=off_pred,
        ))
    return MBONBatch(views=views)


class TestPPNLoss:
    def test_perfect_predictions_near_zero(self):
        labels = np.array([1, 0, 1])
        conf = np.array([[-20.0, 20.0], [20.0, -20.0], [-20.0, 20.0]])
        off = np.zeros((3, 4))
        batch = PPNBatch(labels=labels, conf_logits=conf,
                         bev_gt=off, bev_pred=off.copy(),
                         view_gt=np.zeros((2, 3, 4)), view_pred=np.zeros((2, 3, 4)))
        assert ppn_loss(batch) < 1e-6

    def test_default_lambdas(self):
        batch = make_ppn(np.random.default_rng(1))
        assert batch.lam_bev == 3.0
        assert batch.lam_2d == 1.0

    def test_hand_composite(self):
        # 1 positive anchor, uniform conf logits, BEV error (0.5, 0, 0, 0):
        # ln 2 + 3 * 0.125 = 1.0681...
        batch = PPNBatch(labels=[1], conf_logits=[[0.0, 0.0]],
                         bev_gt=[[0.0, 0.0, 0.0, 0.0]],
                         bev_pred=[[0.5, 0.0, 0.0, 0.0]])
        assert ppn_loss(batch) == pytest.approx(LN2 + 0.375, abs=1e-12)

    def test_no_positives_with_offsets(self):
        with pytest.raises(NoPositivesWithOffsets):
            PPNBatch(labels=[0, 0], conf_logits=[[0, 0], [0, 0]],
                     bev_gt=np.zeros((2, 4)), bev_pred=np.zeros((2, 4)))

    def test_conf_only_batch_allowed(self):
        batch = PPNBatch(labels=[0, 0], conf_logits=[[0.0, 0.0], [0.0, 0.0]])
        assert ppn_loss(batch) == pytest.approx(LN2, abs=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            assert ppn_loss(make_ppn(rng)) >= 0.0


class TestMBONLoss:
    def test_perfect_predictions_near_zero(self):
        bins = np.zeros((2, 4))
        bins[:, 1] = 1.0
        logits = np.full((2, 4), -20.0)
        logits[:, 1] = 20.0
        view = MBONViewBatch(labels=[1, 1],
                             conf_logits=[[-20.0, 20.0], [-20.0, 20.0]],
                             bin_labels=bins, bin_logits=logits,
                             offset_gt=[0.2, -0.1], offset_pred=[0.2, -0.1])
        assert mbon_loss(MBONBatch(views=[view])) < 1e-6

    def test_default_lambda(self):
        assert MBONBatch(views=make_mbon(np.random.default_rng(3)).views).lam_ori == 0.4

    def test_hand_composite(self):
        # single view, single positive: uniform conf (ln 2) + saturated
        # correct bins (~0) + 0.4 * (1 - cos(pi/3)) = 0.8931...
        bins = np.zeros((1, 8))
        bins[0, 2] = 1.0
        logits = np.full((1, 8), -20.0)
        logits[0, 2] = 20.0
        view = MBONViewBatch(labels=[1], conf_logits=[[0.0, 0.0]],
                             bin_labels=bins, bin_logits=logits,
                             offset_gt=[0.1], offset_pred=[0.1 + math.pi / 3])
        assert mbon_loss(MBONBatch(views=[view])) == pytest.approx(LN2 + 0.2, abs=1e-9)

    def test_sums_over_views(self):
        rng = np.random.default_rng(4)
        batch = make_mbon(rng, n_views=2)
        each = [mbon_loss(MBONBatch(views=[v])) for v in batch.views]
        assert mbon_loss(batch) == pytest.approx(sum(each), abs=1e-12)

    def test_view_without_positives_rejected(self):
        view = MBONViewBatch(labels=[0], conf_logits=[[0.0, 0.0]],
                             bin_labels=np.zeros((1, 4)), bin_logits=np.zeros((1, 4)),
                             offset_gt=[0.0], offset_pred=[0.0])
        with pytest.raises(NoPositivesWithOffsets):
            MBONBatch(views=[view])


class TestGradients:
    def test_smooth_l1_gradcheck(self):
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(100):
            while True:
                pred = rng.uniform(-3, 3, size=4)
                gt = rng.uniform(-3, 3, size=4)
                if np.all(np.abs(np.abs(pred - gt) - 1.0) > 0.05):
                    break
            worst = max(worst, finite_difference_check(
                lambda: smooth_l1(pred, gt), {"pred": pred},
                {"pred": smooth_l1_grad(pred, gt)}))
        assert worst < 1e-5

    def test_softmax_ce_gradcheck(self):
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(100):
            logits = rng.uniform(-3, 3, size=5)
            label = int(rng.integers(0, 5))
            worst = max(worst, finite_difference_check(
                lambda: softmax_ce(logits, label), {"logits": logits},
                {"logits": softmax_ce_grad(logits, label)}))
        assert worst < 1e-5

    def test_cosine_gradcheck(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            while True:
                pred = rng.uniform(-3, 3, size=3)
                gt = rng.uniform(-3, 3, size=3)
                if np.all(np.abs(np.sin(pred - gt)) > 0.05):
                    break
            worst = max(worst, finite_difference_check(
                lambda: orientation_cosine_loss(pred, gt), {"pred": pred},
                {"pred": orientation_cosine_grad(pred, gt)}))
        assert worst < 1e-5

    def test_ppn_gradcheck(self):
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(25):
            batch = make_ppn(rng)
            grads = ppn_loss_grads(batch)
            arrays = {"conf_logits": batch.conf_logits,
                      "bev_pred": batch.bev_pred,
                      "view_pred": batch.view_pred}
            worst = max(worst, finite_difference_check(
                lambda: ppn_loss(batch), arrays, grads))
        assert worst < 1e-5

    def test_mbon_gradcheck(self):
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(25):
            batch = make_mbon(rng)
            for view, grads in zip(batch.views, mbon_loss_grads(batch)):
                arrays = {"conf_logits": view.conf_logits,
                          "bin_logits": view.bin_logits,
                          "offset_pred": view.offset_pred}
                worst = max(worst, finite_difference_check(
                    lambda: mbon_loss(batch), arrays, grads))
        assert worst < 1e-5
