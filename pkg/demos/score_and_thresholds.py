"""Scoring a segment in fixed point, rescaling a PWM, and choosing thresholds.

Run: python demos/score_and_thresholds.py
"""
from qpwm.io import parse_pwm_text
from qpwm.pwm_core import PwmSet, Sequence, classical_match, rescale, score_segment
from qpwm.synth import random_sequence
from qpwm.thresholds import (
    BackgroundModel,
    exact_score_distribution,
    moment_summary,
    normal_approx_tail,
    pvalue_threshold,
    soft_hard_thresholds,
)

import numpy as np

PWM_TEXT = """\
#alphabet ACGT
A -1.31 -0.62 -1.31 +0.63 -1.31 -1.31 -1.31 +0.48
C -0.83 -0.83 +1.12 -0.83 +1.12 +1.12 +1.37 -0.83
G -0.83 +1.25 +0.27 +0.27 -0.83 +0.27 -0.83 +0.56
T +0.89 -1.31 -1.31 -1.31 -0.21 -1.31 -1.31 -1.31
"""

pwm = parse_pwm_text(PWM_TEXT, name="demo")
seg = Sequence.from_string("TACATGCA")
w = score_segment(pwm, seg, 0)
print("score of TACATGCA:", w.to_decimal())
print("  to two decimals:", f"{float(w):.2f}")
print("  worst-case truncation loss, in ulps:", float(pwm.loss))

# the score is a sum of truncated entries, so it sits a few ulps under 3.93;
# thresholds absorb that loss and the boundary segment still matches
pset = PwmSet([pwm])
print("match set at w_th = 3.93:", classical_match(pset, seg, 3.93).to_list())

# mapping every entry into [0, 1] moves the threshold along and keeps the match set
rng = np.random.default_rng(1)
seq = random_sequence(rng, 2000)
scaled, w_scaled = rescale(pset, 3.0)
before = classical_match(pset, seq, 3.0)
after = classical_match(scaled, seq, w_scaled)
print(f"rescaled threshold: {float(w_scaled):.4f}; {len(before)} matches before, "
      f"{len(after)} after, identical: {before == after}")

# background-driven thresholds: exact score law versus its normal approximation
bg = BackgroundModel.uniform(4)
dist = exact_score_distribution(scaled[0], bg)
summ = moment_summary(scaled[0], bg)
th = soft_hard_thresholds(summ, 2.0, 3.0)
print(f"background mean {summ.mu_tilde:.4f}, sd {summ.s_m:.4f}")
for name, value in (("w_soft", th.w_soft), ("w_hard", th.w_hard)):
    print(f"  {name} = {value:.4f}: normal tail {normal_approx_tail(summ, value):.3e}, "
          f"exact tail {dist.tail(value):.3e}")
w_p = pvalue_threshold(dist, 1e-3)
print("largest threshold with exact p-value >= 1e-3:", w_p.to_decimal()[:10])
