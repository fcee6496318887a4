"""Score statistics under an i.i.d. background model.

The exact null distribution of a PWM score is built by convolving the
per-position score laws over exact fixed-point values (no binning).  On top
of it sit p-value thresholds, the normal approximation of the upper tail and
the soft/hard threshold pair placed a fixed number of standard deviations
above the background mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateInputError, PreconditionError, ResourceError
from .fixed_point import FixedPointFormat, FxValue, RealLike, to_fraction
from .pwm_core import Pwm

DEFAULT_SUPPORT_CAP = 1 << 20
_PROB_TOL = 1e-9


@dataclass(frozen=True)
class BackgroundModel:
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        probs = tuple(to_fraction(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if any(not 0 < p < 1 for p in probs):
            raise PreconditionError("background probabilities must lie in (0, 1)")
        if abs(float(sum(probs)) - 1.0) > _PROB_TOL:
            raise PreconditionError(f"background probabilities sum to {float(sum(probs))}, not 1")

    @classmethod
    def uniform(cls, size: int) -> "BackgroundModel":
        return cls(tuple(Fraction(1, size) for _ in range(size)))

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


@dataclass(frozen=True, eq=False)
class ScoreDistribution:
    """Law of W; ``support`` holds raw fixed-point scores in ascending order."""

    support: np.ndarray
    mass: np.ndarray
    fmt: FixedPointFormat

    def __post_init__(self):
        if np.any(np.diff(self.support) <= 0):
            raise PreconditionError("support must be strictly ascending")

    @property
    def values(self) -> np.ndarray:
        return self.support / self.fmt.scale

    def tails(self) -> np.ndarray:
        """P(W >= support[l]) for every l."""
        return np.cumsum(self.mass[::-1])[::-1]

    def tail(self, w: RealLike) -> float:
        """P(W >= w) for a real or fixed-point w."""
        if isinstance(w, FxValue):
            raw = w.raw
        else:
            raw = math.ceil(to_fraction(w) * self.fmt.scale)
        return float(np.sum(self.mass[self.support >= raw]))

    def as_dict(self) -> dict[int, float]:
        return {int(s): float(p) for s, p in zip(self.support, self.mass)}


def exact_score_distribution(pwm: Pwm, bg: BackgroundModel,
                             cap: int = DEFAULT_SUPPORT_CAP) -> ScoreDistribution:
    """Null distribution of the PWM score by position-wise convolution."""
    if len(bg.probs) != len(pwm.alphabet):
        raise PreconditionError("background model and PWM alphabets differ in size")
    p = bg.as_array()
    support = np.zeros(1, dtype=np.int64)
    mass = np.ones(1)
    for j in range(pwm.m):
        cand = (support[:, None] + pwm.raw[j][None, :]).ravel()
        weight = (mass[:, None] * p[None, :]).ravel()
        support, inv = np.unique(cand, return_inverse=True)
        if support.size > cap:
            raise ResourceError(f"score support exceeds the cap of {cap} values")
        mass = np.bincount(inv.ravel(), weights=weight, minlength=support.size)
    return ScoreDistribution(support, mass, pwm.fmt)


def exact_score_distribution_rational(pwm: Pwm, bg: BackgroundModel,
                                      cap: int = DEFAULT_SUPPORT_CAP) -> dict[int, Fraction]:
    """Same convolution with rational masses; used where bit-exact comparison matters."""
    dist: dict[int, Fraction] = {0: Fraction(1)}
    for j in range(pwm.m):
        nxt: dict[int, Fraction] = {}
        for s, w in dist.items():
            for a, pa in enumerate(bg.probs):
                key = s + int(pwm.raw[j, a])
                nxt[key] = nxt.get(key, Fraction(0)) + w * pa
        if len(nxt) > cap:
            raise ResourceError(f"score support exceeds the cap of {cap} values")
        dist = nxt
    return dict(sorted(dist.items()))


def pvalue_threshold(dist: ScoreDistribution, p: float) -> FxValue:
    """Largest attainable score w with P(W >= w) >= p."""
    if not 0 < p < 1:
        raise PreconditionError("p must lie in (0, 1)")
    tails = dist.tails()
    ok = np.nonzero(tails >= p * (1 - 1e-12))[0]
    return FxValue(int(dist.support[ok[-1]]), dist.fmt)


@dataclass(frozen=True)
class MomentSummary:
    mu: tuple[float, ...]
    var: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.mu)

    @property
    def mu_tilde(self) -> float:
        return math.fsum(self.mu)

    @property
    def s2(self) -> float:
        return math.fsum(self.var)

    @property
    def s_m(self) -> float:
        return math.sqrt(self.s2)


def moment_summary(pwm: Pwm, bg: BackgroundModel) -> MomentSummary:
    mus, vars_ = [], []
    for j in range(pwm.m):
        col = [pwm.fmt.raw_to_fraction(int(r)) for r in pwm.raw[j]]
        mu = sum(pa * c for pa, c in zip(bg.probs, col))
        var = sum(pa * (c - mu) ** 2 for pa, c in zip(bg.probs, col))
        mus.append(float(mu))
        vars_.append(float(var))
    return MomentSummary(tuple(mus), tuple(vars_))


def normal_upper_tail(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_approx_tail(summary: MomentSummary, w: float) -> float:
    """Standard normal upper tail at (w - mu_tilde) / s_m."""
    if summary.s2 <= 0:
        raise DegenerateInputError("zero score variance: the normal approximation is degenerate")
    return normal_upper_tail((float(w) - summary.mu_tilde) / summary.s_m)


@dataclass(frozen=True)
class SoftHardThresholds:
    w_soft: float
    w_hard: float
    x_soft: float | None = None
    x_hard: float | None = None

    @property
    def w_mid(self) -> float:
        return 0.5 * (self.w_soft + self.w_hard)

    @property
    def gap(self) -> float:
        return self.w_hard - self.w_soft

    def check(self, m: int) -> "SoftHardThresholds":
        if not 0 < self.w_soft < self.w_hard < m:
            raise PreconditionError(
                f"need 0 < w_soft < w_hard < m, got w_soft={self.w_soft}, "
                f"w_hard={self.w_hard}, m={m}"
            )
        return self


def soft_hard_thresholds(summary: MomentSummary, x_soft: float,
                         x_hard: float) -> SoftHardThresholds:
    """w = mu_tilde + x * s_m for the two sigma multipliers."""
    if not 0 < x_soft < x_hard:
        raise PreconditionError("need 0 < x_soft < x_hard")
    if summary.s2 <= 0:
        raise DegenerateInputError("zero score variance")
    th = SoftHardThresholds(
        w_soft=summary.mu_tilde + x_soft * summary.s_m,
        w_hard=summary.mu_tilde + x_hard * summary.s_m,
        x_soft=x_soft,
        x_hard=x_hard,
    )
    return th.check(summary.m)


@dataclass(frozen=True)
class CltReport:
    holds: bool
    qualifying: int
    required: int
    bound: float
    delta: float


def clt_condition_report(pwm: Pwm, bg: BackgroundModel, r: float, sigma_min2: float,
                         delta: float = 1.0) -> CltReport:
    """Check that >= ceil(r m) positions have variance >= sigma_min2 and evaluate the Lyapunov bound."""
    if not 0 < r <= 1:
        raise PreconditionError("r must lie in (0, 1]")
    if sigma_min2 <= 0:
        raise PreconditionError("sigma_min2 must be positive")
    summary = moment_summary(pwm, bg)
    m = summary.m
    required = math.ceil(r * m)
    qualifying = sum(v >= sigma_min2 for v in summary.var)
    bound = m / ((r * m) ** (1 + delta / 2) * sigma_min2 ** (1 + delta / 2))
    return CltReport(qualifying >= required, int(qualifying), required, bound, delta)


def tail_discrepancy(pwm: Pwm, bg: BackgroundModel, xs) -> np.ndarray:
    """|P(W >= mu_tilde + x s_m) - normal tail(x)| for each sigma multiplier x."""
    dist = exact_score_distribution(pwm, bg)
    summary = moment_summary(pwm, bg)
    out = []
    for x in np.atleast_1d(xs):
        w = summary.mu_tilde + float(x) * summary.s_m
        raw = math.ceil(w * dist.fmt.scale)
        exact = float(np.sum(dist.mass[dist.support >= raw]))
        out.append(abs(exact - normal_upper_tail(float(x))))
    return np.array(out)


def tail_discrepancy_band(pwm: Pwm, bg: BackgroundModel, lo: float, hi: float,
                          points: int = 101) -> float:
    """Largest tail discrepancy over an evenly spaced grid of sigma multipliers in [lo, hi].

    Lattice score laws make the pointwise discrepancy oscillate with m; the
    supremum over a band is the quantity that decays like a Berry-Esseen bound.
    """
    if not lo <= hi or points < 1:
        raise PreconditionError("need lo <= hi and points >= 1")
    return float(np.max(tail_discrepancy(pwm, bg, np.linspace(lo, hi, points))))
