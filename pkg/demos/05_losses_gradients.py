"""Training objectives as checkable functions: values and gradients.

The proposal loss combines anchor confidence with gated offset terms; the
orientation loss combines per-view confidence, interval classification,
and a cosine offset term. Both ship with analytic gradients that a
finite-difference probe verifies without any training machinery.
"""

import math

import numpy as np

from mvbev import (
    MBONBatch,
    MBONViewBatch,
    PPNBatch,
    gradient_check_suite,
    mbon_loss,
    orientation_cosine_loss,
    ppn_loss,
    smooth_l1,
    softmax_ce,
)

# Building blocks.
print(f"smooth_l1(d=0.5)  = {smooth_l1([0.5], [0.0]):.4f}   (quadratic zone)")
print(f"smooth_l1(d=2.0)  = {smooth_l1([2.0], [0.0]):.4f}   (linear zone)")
print(f"softmax_ce(0,0)@0 = {softmax_ce([0.0, 0.0], 0):.4f}   (= ln 2)")
print(f"cosine(pi/3)      = {orientation_cosine_loss([math.pi / 3], [0.0]):.4f}")

# Position-proposal loss: one positive anchor, uniform confidence logits,
# a half-width BEV offset error, default weights (3, 1).
batch = PPNBatch(labels=[1], conf_logits=[[0.0, 0.0]],
                 bev_gt=[[0.0, 0.0, 0.0, 0.0]], bev_pred=[[0.5, 0.0, 0.0, 0.0]])
print(f"\nproposal loss = {ppn_loss(batch):.6f} "
      f"(ln 2 + 3 * 0.125 = {math.log(2) + 0.375:.6f})")

# Orientation loss: one view, one positive box, saturated correct bins,
# a 60-degree offset error, default weight 0.4.
bins = np.zeros((1, 8))
bins[0, 2] = 1.0
logits = np.full((1, 8), -20.0)
logits[0, 2] = 20.0
view = MBONViewBatch(labels=[1], conf_logits=[[0.0, 0.0]],
                     bin_labels=bins, bin_logits=logits,
                     offset_gt=[0.1], offset_pred=[0.1 + math.pi / 3])
print(f"orientation loss = {mbon_loss(MBONBatch(views=[view])):.6f} "
      f"(ln 2 + 0.4 * 0.5 = {math.log(2) + 0.2:.6f})")

# Finite differences vs analytic gradients, 20 random points per loss.
print("\nfinite-difference audit (20 points per loss):")
for name, err in gradient_check_suite(seed=0, n_points=20).items():
    print(f"  {name:>20}: max relative error {err:.2e}")
