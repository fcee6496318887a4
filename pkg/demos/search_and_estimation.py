"""The two amplitude routines the matchers are built on.

Amplitude-amplified search finds a flagged item in about 1/sqrt(a) oracle
uses; amplitude estimation returns sin^2(pi y / M) with a known law, and a
median of J runs gives a mean estimate within epsilon except with
probability delta.

Run: python demos/search_and_estimation.py
"""
import math

import numpy as np

from qpwm.amplitude_engines import (
    GoodSubspace,
    QaaParams,
    ae_error_bound,
    make_qmci_params,
    qae_distribution,
    qmci_estimate_distribution,
    qsearch,
)

rng = np.random.default_rng(0)
params = QaaParams(gamma=1e-4, delta=0.05)
print("search with gamma = 1e-4, delta = 0.05")
for a in (1e-4, 4e-4, 1.6e-3, 6.4e-3):
    runs = [qsearch(GoodSubspace(a), params, rng) for _ in range(400)]
    rate = np.mean([r.success for r in runs])
    med = np.median([r.queries for r in runs if r.success])
    print(f"  a = {a:.1e}: success {rate:.3f}, median queries {med:.0f}, "
          f"queries * sqrt(a) = {med * math.sqrt(a):.2f}")
fails = sum(qsearch(GoodSubspace(0.0), params, rng).success for _ in range(400))
print("  a = 0: successes in 400 runs:", fails)

print("\nsingle amplitude estimation with M = 64")
for a in (0.05, 0.3, 0.7):
    d = qae_distribution(a, 64)
    bound = ae_error_bound(a, 64)
    print(f"  a = {a}: mass within {bound:.4f} of a is {d.mass_within(a, bound):.4f} "
          f"(floor {8 / math.pi**2:.4f})")

p = make_qmci_params(0.05, 0.01)
print(f"\nmedian of J = {p.J} runs with M = {p.M}: {p.oracle_calls} oracle calls")
for mu in (0.1, 0.5, 0.9):
    d = qmci_estimate_distribution(mu, p)
    print(f"  mu = {mu}: P(|estimate - mu| <= 0.05) = {d.mass_within(mu, 0.05):.6f}")
