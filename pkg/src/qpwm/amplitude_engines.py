"""Amplitude amplification and estimation engines at the level of outcome laws.

* :func:`qsearch` runs the success/failure search contract by simulating
  measurements of G^j V|0> in the two-dimensional Grover plane.  It needs only
  the good-subspace probability ``a`` and, on success, a sampler for the good
  subspace's conditional distribution.
* :func:`qae_distribution` is the exact outcome law of canonical amplitude
  estimation with M Grover applications.
* :func:`qmci_estimate_distribution` and :func:`qmci_tail` give the law of the
  median of J independent estimates, which is the mean-estimation oracle used
  for segment scores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.stats import binom

from .errors import PreconditionError

# Growth factor of the random iteration range between search steps, and the
# number of extra steps taken once the range has reached its cap.
GROWTH = 6 / 5
CAP_STEPS = 3

# Estimates within this distance below a threshold count as reaching it;
# sin^2 of lattice angles is only accurate to a few ulps.
EST_TOL = 1e-12

UNIVERSAL_C = math.pi ** 2


def grover_success_prob(a: float, j: int) -> float:
    """Probability of measuring the flag after j Grover iterations."""
    if not 0 <= a <= 1:
        raise PreconditionError("a must lie in [0, 1]")
    if a == 0:
        return 0.0
    theta = math.asin(math.sqrt(a))
    return math.sin((2 * j + 1) * theta) ** 2


@dataclass(frozen=True)
class QaaParams:
    gamma: float
    delta: float

    def __post_init__(self):
        if not (0 < self.gamma < 1 and 0 < self.delta < 1):
            raise PreconditionError("gamma and delta must lie in (0, 1)")

    @property
    def schedules(self) -> int:
        """Independent schedule repetitions; each fails with probability <= 1/2 when a >= gamma."""
        return math.ceil(math.log2(1 / self.delta)) + 1

    @property
    def range_cap(self) -> int:
        return math.ceil(1 / math.sqrt(self.gamma))


@dataclass(frozen=True)
class QaaOutcome:
    status: str
    label: Any = None
    queries: int = 0
    steps: int = 0

    @property
    def success(self) -> bool:
        return self.status == "success"


@dataclass
class GoodSubspace:
    """What a search needs to know about V|0>: the flagged mass and a sampler for it."""

    a: float
    sample: Callable[[np.random.Generator], Any] | None = None


def qsearch(source, params: QaaParams, rng: np.random.Generator,
            on_query: Callable[[int], None] | None = None) -> QaaOutcome:
    """Amplitude-amplified search with unknown a >= gamma.

    Each step draws j uniformly below the current range, applies V once and
    G = -V S_0 V^-1 S_chi j times (2j + 1 applications of V or its inverse)
    and measures the flag.  The range grows by ``GROWTH`` up to
    ceil(1/sqrt(gamma)); after ``CAP_STEPS`` steps at the cap the schedule
    ends.  The schedule is repeated ``params.schedules`` times or until a
    success.  ``on_query`` receives the V-application count of every step.
    """
    if isinstance(source, GoodSubspace):
        sub = source
    elif callable(source):
        sub = GoodSubspace(float(source()))
    else:
        sub = GoodSubspace(float(source))
    a = sub.a
    if not 0 <= a <= 1:
        raise PreconditionError(f"good-subspace probability {a} outside [0, 1]")
    theta = math.asin(math.sqrt(a)) if a > 0 else 0.0
    cap = params.range_cap
    queries = steps = 0
    for _ in range(params.schedules):
        level = 1.0
        at_cap = 0
        while True:
            j = int(rng.integers(0, math.ceil(level)))
            cost = 2 * j + 1
            queries += cost
            steps += 1
            if on_query is not None:
                on_query(cost)
            p = math.sin((2 * j + 1) * theta) ** 2 if a > 0 else 0.0
            if a > 0 and rng.random() < p:
                label = sub.sample(rng) if sub.sample is not None else None
                return QaaOutcome("success", label, queries, steps)
            if level >= cap:
                at_cap += 1
                if at_cap >= CAP_STEPS:
                    break
            level = min(level * GROWTH, float(cap))
    return QaaOutcome("failure", None, queries, steps)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    support: np.ndarray
    mass: np.ndarray

    @property
    def total(self) -> float:
        return math.fsum(self.mass)

    def tail(self, threshold: float) -> float:
        """P(estimate >= threshold)."""
        return float(np.sum(self.mass[self.support >= threshold - EST_TOL]))

    def mass_within(self, center: float, radius: float) -> float:
        return float(np.sum(self.mass[np.abs(self.support - center) <= radius + EST_TOL]))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def mean(self) -> float:
        return float(np.dot(self.support, self.mass))


def _fejer(d: np.ndarray, M: int) -> np.ndarray:
    """|(1/M) sum_x exp(2 pi i x d)|^2, equal to 1 at integer d."""
    d = d - np.round(d)
    s = np.sin(np.pi * d)
    small = np.abs(s) < 1e-15
    safe = np.where(small, 1.0, s)
    val = np.sin(M * np.pi * d) ** 2 / (M * M * safe * safe)
    return np.where(small, 1.0, val)


def _check_power_of_two(M: int):
    if M < 2 or M & (M - 1):
        raise PreconditionError(f"M must be a power of two >= 2, got {M}")


def ae_estimates(M: int) -> np.ndarray:
    """Distinct estimates sin^2(pi y / M), y = 0..M/2, ascending."""
    return np.sin(np.pi * np.arange(M // 2 + 1) / M) ** 2


def ae_masses(a, M: int) -> np.ndarray:
    """Outcome masses over :func:`ae_estimates` for one or many amplitudes a."""
    _check_power_of_two(M)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any((a < 0) | (a > 1)):
        raise PreconditionError("a must lie in [0, 1]")
    phi = np.arcsin(np.sqrt(a))[:, None] / np.pi
    y = np.arange(M)[None, :] / M
    p = 0.5 * (_fejer(phi - y, M) + _fejer(-phi - y, M))
    half = M // 2
    out = np.empty((a.size, half + 1))
    out[:, 0] = p[:, 0]
    out[:, half] = p[:, half]
    out[:, 1:half] = p[:, 1:half] + p[:, M - 1:half:-1]
    return out


def qae_distribution(a: float, M: int) -> OutcomeDistribution:
    """Exact law of the canonical amplitude-estimation output with M Grover applications."""
    mass = ae_masses(a, M)[0]
    return OutcomeDistribution(ae_estimates(M), mass)


def ae_error_bound(a: float, M: int) -> float:
    """Radius holding with probability >= 8/pi^2 for one estimation run."""
    return 2 * math.pi * math.sqrt(a * (1 - a)) / M + math.pi ** 2 / M ** 2


def ae_oracle_calls(M: int) -> int:
    """State-preparation calls in one estimation run: 2(M - 1) inside Grover powers plus one."""
    return 2 * M - 1


@dataclass(frozen=True)
class QaeParams:
    t: int
    M: int
    C: float = UNIVERSAL_C

    def __post_init__(self):
        _check_power_of_two(self.M)
        if self.C <= 0:
            raise PreconditionError("C must be positive")


@dataclass(frozen=True)
class QmciParams:
    epsilon: float
    delta: float
    J: int
    qae: QaeParams

    @property
    def M(self) -> int:
        return self.qae.M

    @property
    def t(self) -> int:
        return self.qae.t

    @property
    def oracle_calls(self) -> int:
        """O_X calls in one median-of-J mean oracle."""
        return self.J * ae_oracle_calls(self.M)


def repetitions_for(delta: float) -> int:
    return 12 * math.ceil(math.log2(1 / delta)) + 1


def make_qmci_params(epsilon: float, delta: float, C: float = UNIVERSAL_C) -> QmciParams:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise PreconditionError("epsilon and delta must lie in (0, 1)")
    t = math.ceil(2 * C / epsilon)
    M = max(2, 1 << (t - 1).bit_length())
    return QmciParams(epsilon, delta, repetitions_for(delta), QaeParams(t, M, C))


def median_cdf(per_run_cdf: np.ndarray, J: int) -> np.ndarray:
    """P(median <= v_l) = P(at least (J+1)/2 runs <= v_l)."""
    h = (J + 1) // 2
    out = binom.sf(h - 1, J, np.clip(per_run_cdf, 0.0, 1.0))
    return np.where(per_run_cdf >= 1.0 - 1e-15, 1.0, out)


def qmci_estimate_distribution(mu: float, params: QmciParams) -> OutcomeDistribution:
    """Law of the median of J independent amplitude-estimation outputs for mean mu."""
    if params.J % 2 == 0:
        raise PreconditionError("the median needs an odd J")
    per_run = qae_distribution(mu, params.M)
    cdf = median_cdf(np.cumsum(per_run.mass), params.J)
    cdf[-1] = 1.0
    mass = np.diff(cdf, prepend=0.0)
    return OutcomeDistribution(per_run.support, np.clip(mass, 0.0, None))


def qmci_tail(mu, threshold: float, params: QmciParams):
    """P(median estimate >= threshold); vectorised over mu."""
    est = ae_estimates(params.M)
    hit = est >= threshold - EST_TOL
    scalar = np.ndim(mu) == 0
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    q = np.empty(mus.size)
    for lo in range(0, mus.size, 2048):
        block = ae_masses(mus[lo:lo + 2048], params.M)
        q[lo:lo + 2048] = block[:, hit].sum(axis=1)
    h = (params.J + 1) // 2
    out = binom.sf(h - 1, params.J, np.clip(q, 0.0, 1.0))
    return float(out[0]) if scalar else out
