"""Synthetic instances with planted high-scoring segments.

Every PWM has a consensus symbol per position scoring 1 and off-consensus
entries drawn from two-decimal values in [0, off_max], so the set is already
in [0, 1] and a consensus segment scores exactly m.  Hard plants copy the
consensus; soft plants copy it with ``soft_mutations`` positions changed, so
their score lies in [m - d, m - d + d * off_max].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import PreconditionError
from .fixed_point import DEFAULT_FORMAT, FixedPointFormat
from .pwm_core import DNA, Alphabet, IndexPair, Pwm, PwmSet, Sequence, mark_rescaled


@dataclass
class SyntheticInstance:
    seq: Sequence
    pwmset: PwmSet
    consensus: np.ndarray
    hard: list[IndexPair] = field(default_factory=list)
    soft: list[IndexPair] = field(default_factory=list)

    @property
    def planted(self) -> list[IndexPair]:
        return self.hard + self.soft


def random_pwm(rng: np.random.Generator, m: int, alphabet: Alphabet = DNA,
               consensus: np.ndarray | None = None, off_max: int = 49,
               fmt: FixedPointFormat = DEFAULT_FORMAT, name: str = "") -> Pwm:
    """Off-consensus entries are hundredths in [0, off_max / 100]."""
    A = len(alphabet)
    if consensus is None:
        consensus = rng.integers(0, A, size=m)
    vals = rng.integers(0, off_max + 1, size=(m, A))
    rows = []
    for j in range(m):
        row = [Fraction(int(v), 100) for v in vals[j]]
        row[int(consensus[j])] = Fraction(1)
        rows.append(row)
    return Pwm.from_rows(alphabet, rows, fmt=fmt, name=name)


def random_pwmset(rng: np.random.Generator, K: int, m: int, alphabet: Alphabet = DNA,
                  lo: int = -200, hi: int = 200, denominator: int = 100,
                  fmt: FixedPointFormat = DEFAULT_FORMAT) -> PwmSet:
    """Unstructured set with entries p / denominator for integer p in [lo, hi]."""
    A = len(alphabet)
    pwms = []
    for k in range(K):
        vals = rng.integers(lo, hi + 1, size=(m, A))
        pwms.append(Pwm.from_rows(alphabet, [[Fraction(int(v), denominator) for v in row]
                                             for row in vals], fmt=fmt, name=f"pwm{k}"))
    return PwmSet(pwms)


def random_sequence(rng: np.random.Generator, n: int, alphabet: Alphabet = DNA,
                    probs=None) -> Sequence:
    return Sequence(alphabet, rng.choice(len(alphabet), size=n, p=probs))


def generate_synthetic(rng: np.random.Generator, n: int, m: int, K: int = 1,
                       n_hard: int = 0, n_soft: int = 0, alphabet: Alphabet = DNA,
                       soft_mutations: int = 2, off_max: int = 49,
                       fmt: FixedPointFormat = DEFAULT_FORMAT) -> SyntheticInstance:
    """Random background sequence with planted consensus (hard) and mutated (soft) segments.

    Plants occupy disjoint windows, so at most floor(n / m) fit.
    """
    if n < m or m < 2 or K < 1:
        raise PreconditionError("need n >= m >= 2 and K >= 1")
    planted = n_hard + n_soft
    if planted > n // m:
        raise PreconditionError(f"{planted} plants of length {m} do not fit in n = {n}")
    if not 0 <= soft_mutations <= m:
        raise PreconditionError("soft_mutations must lie in [0, m]")
    A = len(alphabet)
    if soft_mutations and A < 2:
        raise PreconditionError("mutations need at least two symbols")
    consensus = rng.integers(0, A, size=(K, m))
    pwms = [random_pwm(rng, m, alphabet, consensus[k], off_max, fmt, name=f"pwm{k}")
            for k in range(K)]
    pwmset = mark_rescaled(PwmSet(pwms))
    data = rng.integers(0, A, size=n)
    slots = rng.choice(n // m, size=planted, replace=False)
    hard, soft = [], []
    for p, slot in enumerate(slots):
        i = int(slot) * m
        k = int(rng.integers(0, K))
        window = consensus[k].copy()
        if p >= n_hard:
            for j in rng.choice(m, size=soft_mutations, replace=False):
                window[j] = (window[j] + int(rng.integers(1, A))) % A
            soft.append(IndexPair(k, i))
        else:
            hard.append(IndexPair(k, i))
        data[i:i + m] = window
    return SyntheticInstance(Sequence(alphabet, data), pwmset, consensus, hard, soft)


def binary_column_pwm(m: int, alphabet: Alphabet = Alphabet(("A", "C")),
                      fmt: FixedPointFormat = DEFAULT_FORMAT) -> Pwm:
    """Every position scores 0 for the first symbol and 1 for the second."""
    if len(alphabet) != 2:
        raise PreconditionError("the binary-column family uses a two-symbol alphabet")
    return Pwm.from_rows(alphabet, [[0, 1]] * m, fmt=fmt, name=f"binary{m}")
