"""Alphabets, sequences, PWMs, segment scores and the exhaustive classical matcher.

PWM entries are kept twice: as exact rationals (what the user wrote) and as
raw fixed-point integers truncated once at construction.  All scores are
sums of raw integers, so the classical matcher and the simulated quantum
circuits see identical numbers.

A real threshold is converted to a raw threshold by :func:`threshold_raw`,
which lowers it by the worst-case truncation accumulated over the ``m``
summed entries.  A segment whose exact score reaches the threshold is then
always matched, and the set of matches is unchanged by rescaling whenever
distinct exact scores are further apart than that slack.
"""
from __future__ import annotations

import math
from collections import abc
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DegenerateInputError, PreconditionError, RangeError
from .fixed_point import (
    DEFAULT_FORMAT,
    FixedPointFormat,
    FxValue,
    RealLike,
    fx_add,
    sum_raw,
    to_fraction,
)


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not symbols:
            raise PreconditionError("alphabet must be nonempty")
        if len(set(symbols)) != len(symbols):
            raise PreconditionError(f"duplicate symbols in alphabet {symbols}")
        if any(len(s) != 1 for s in symbols):
            raise PreconditionError("alphabet symbols must be single characters")

    @classmethod
    def from_string(cls, s: str) -> "Alphabet":
        return cls(tuple(s))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __str__(self):
        return "".join(self.symbols)

    def label(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise KeyError(f"symbol {symbol!r} not in alphabet {self}") from None

    def symbol(self, label: int) -> str:
        if not 0 <= label < len(self.symbols):
            raise RangeError(f"label {label} outside alphabet of size {len(self)}")
        return self.symbols[label]

    def encode(self, text: str) -> np.ndarray:
        lookup = {s: i for i, s in enumerate(self.symbols)}
        try:
            return np.array([lookup[c] for c in text], dtype=np.int64)
        except KeyError as exc:
            raise KeyError(f"symbol {exc.args[0]!r} not in alphabet {self}") from None

    def decode(self, labels: Iterable[int]) -> str:
        return "".join(self.symbols[int(a)] for a in labels)


DNA = Alphabet(("A", "C", "G", "T"))


@dataclass(frozen=True, eq=False)
class Sequence:
    alphabet: Alphabet
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.int64).reshape(-1)
        if data.size < 2:
            raise PreconditionError("a sequence needs length n >= 2")
        if data.min() < 0 or data.max() >= len(self.alphabet):
            raise PreconditionError("sequence labels must lie in [|A|]_0")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_string(cls, text: str, alphabet: Alphabet = DNA) -> "Sequence":
        return cls(alphabet, alphabet.encode(text))

    @property
    def n(self) -> int:
        return int(self.data.size)

    def __len__(self):
        return self.n

    def __str__(self):
        return self.alphabet.decode(self.data)

    def __eq__(self, other):
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.alphabet, self.data.tobytes()))


def _fraction_matrix(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(to_fraction(v) for v in row) for row in rows)


@dataclass(frozen=True)
class Pwm:
    """An m x |A| score matrix; ``values[j][a]`` is the score of symbol a at position j."""

    alphabet: Alphabet
    values: tuple[tuple[Fraction, ...], ...]
    fmt: FixedPointFormat = DEFAULT_FORMAT
    rescaled: bool = False
    m_min: Fraction | None = None
    m_max: Fraction | None = None
    name: str = ""
    raw: np.ndarray = field(init=False, compare=False, repr=False)
    loss: Fraction = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        values = _fraction_matrix(self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise PreconditionError(f"PWM length m must be >= 2, got {len(values)}")
        if any(len(row) != len(self.alphabet) for row in values):
            raise PreconditionError("every PWM row needs one entry per alphabet symbol")
        if self.rescaled:
            if self.m_min is None or self.m_max is None:
                raise PreconditionError("a rescaled PWM carries (M_min, M_max)")
            if any(not 0 <= v <= 1 for row in values for v in row):
                raise PreconditionError("rescaled PWM entries must lie in [0, 1]")
        elif self.m_min is not None or self.m_max is not None:
            raise PreconditionError("(M_min, M_max) are only present on rescaled PWMs")
        raw = np.empty((len(values), len(self.alphabet)), dtype=np.int64)
        loss = Fraction(0)
        for j, row in enumerate(values):
            worst = Fraction(0)
            for a, v in enumerate(row):
                r = self.fmt.raw_from_real(v)
                raw[j, a] = r
                worst = max(worst, v * self.fmt.scale - r)
            loss += worst
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "loss", loss)

    @classmethod
    def from_rows(cls, alphabet: Alphabet, rows, fmt: FixedPointFormat = DEFAULT_FORMAT,
                  name: str = "") -> "Pwm":
        """Build from position-major rows: ``rows[j][a]``."""
        return cls(alphabet, _fraction_matrix(rows), fmt=fmt, name=name)

    @property
    def m(self) -> int:
        return len(self.values)

    def entry(self, j: int, a: int) -> FxValue:
        return FxValue(int(self.raw[j, a]), self.fmt)

    def as_float(self) -> np.ndarray:
        return self.raw / self.fmt.scale


class PwmSet(abc.Sequence):
    """K PWMs sharing alphabet, length and fixed-point format."""

    def __init__(self, pwms: Iterable[Pwm]):
        pwms = tuple(pwms)
        if not pwms:
            raise PreconditionError("a PWM set needs K >= 1")
        first = pwms[0]
        for p in pwms[1:]:
            if p.alphabet != first.alphabet:
                raise PreconditionError("PWMs in a set must share one alphabet")
            if p.m != first.m:
                raise PreconditionError("PWMs in a set must share one length; pad first")
            if p.fmt != first.fmt:
                raise PreconditionError("PWMs in a set must share one fixed-point format")
        self._pwms = pwms
        raw = np.stack([p.raw for p in pwms])
        raw.setflags(write=False)
        self.raw = raw

    def __getitem__(self, k):
        return self._pwms[k]

    def __len__(self):
        return len(self._pwms)

    def __eq__(self, other):
        if not isinstance(other, PwmSet):
            return NotImplemented
        return self._pwms == other._pwms

    def __hash__(self):
        return hash(self._pwms)

    def __repr__(self):
        return f"PwmSet(K={self.K}, m={self.m}, alphabet={self.alphabet})"

    @property
    def K(self) -> int:
        return len(self._pwms)

    @property
    def m(self) -> int:
        return self._pwms[0].m

    @property
    def alphabet(self) -> Alphabet:
        return self._pwms[0].alphabet

    @property
    def fmt(self) -> FixedPointFormat:
        return self._pwms[0].fmt

    @property
    def rescaled(self) -> bool:
        return all(p.rescaled for p in self._pwms)

    @property
    def loss(self) -> Fraction:
        return max(p.loss for p in self._pwms)


class IndexPair(NamedTuple):
    k: int
    i: int


class MatchSet:
    """Duplicate-free collection of (k, i) pairs; keeps insertion order, compares as a set."""

    __slots__ = ("_pairs", "_set")

    def __init__(self, pairs: Iterable = ()):
        seen: dict[IndexPair, None] = {}
        for p in pairs:
            k, i = p
            seen.setdefault(IndexPair(int(k), int(i)), None)
        self._pairs = tuple(seen)
        self._set = frozenset(self._pairs)

    def __iter__(self):
        return iter(self._pairs)

    def __len__(self):
        return len(self._pairs)

    def __contains__(self, pair):
        return tuple(pair) in self._set

    def __eq__(self, other):
        if isinstance(other, MatchSet):
            return self._set == other._set
        if isinstance(other, (set, frozenset)):
            return self._set == {IndexPair(*p) for p in other}
        return NotImplemented

    def __hash__(self):
        return hash(self._set)

    def __repr__(self):
        return f"MatchSet({[tuple(p) for p in self.sorted()]})"

    def __or__(self, other):
        return MatchSet((*self._pairs, *other))

    def __and__(self, other):
        other = MatchSet(other)
        return MatchSet(p for p in self._pairs if p in other)

    def __sub__(self, other):
        other = MatchSet(other)
        return MatchSet(p for p in self._pairs if p not in other)

    def issubset(self, other) -> bool:
        other = MatchSet(other)
        return self._set <= other._set

    def issuperset(self, other) -> bool:
        return MatchSet(other).issubset(self)

    def sorted(self) -> list[IndexPair]:
        return sorted(self._pairs)

    def to_list(self) -> list[list[int]]:
        return [[p.k, p.i] for p in self._pairs]


def _check_compatible(pwm_alphabet: Alphabet, seq: Sequence, m: int):
    if pwm_alphabet != seq.alphabet:
        raise PreconditionError("sequence and PWM alphabets differ")
    if seq.n < m:
        raise PreconditionError(f"sequence length {seq.n} is shorter than the PWM length {m}")


def n_positions(seq: Sequence, m: int) -> int:
    """Number of scoreable window offsets, n - m + 1."""
    return seq.n - m + 1


def score_segment(pwm: Pwm, seq: Sequence, i: int) -> FxValue:
    """Fixed-point score of the window starting at ``i``, one adder per position."""
    _check_compatible(pwm.alphabet, seq, pwm.m)
    if not 0 <= i <= seq.n - pwm.m:
        raise RangeError(f"position {i} outside [0, {seq.n - pwm.m}]")
    acc = FxValue(0, pwm.fmt)
    for j in range(pwm.m):
        acc = fx_add(acc, pwm.entry(j, int(seq.data[i + j])))
    return acc


def score_table(pwmset: PwmSet, seq: Sequence) -> np.ndarray:
    """Raw scores of every (k, i) in P_all as a K x (n-m+1) int64 array."""
    _check_compatible(pwmset.alphabet, seq, pwmset.m)
    m, n_sup = pwmset.m, n_positions(seq, pwmset.m)
    out = np.zeros((pwmset.K, n_sup), dtype=np.int64)
    data = seq.data
    for j in range(m):
        out += pwmset.raw[:, j, data[j:j + n_sup]]
    fmt = pwmset.fmt
    bound = m * max(abs(int(pwmset.raw.min())), abs(int(pwmset.raw.max())))
    if bound > fmt.max_raw:
        # the vectorised sum could have wrapped; redo through the wrapping adder
        for k in range(pwmset.K):
            for i in range(n_sup):
                out[k, i] = sum_raw((pwmset.raw[k, j, data[i + j]] for j in range(m)), fmt)[0]
    return out


def threshold_raw(pwmset: PwmSet, w: RealLike) -> int:
    """Raw fixed-point threshold equivalent to the real threshold ``w``.

    An ``FxValue`` is taken verbatim.  Any other real is lowered by the set's
    worst-case truncation loss so that exact scores >= w stay matched.
    """
    if isinstance(w, FxValue):
        if w.fmt != pwmset.fmt:
            raise PreconditionError("threshold format differs from the PWM format")
        return w.raw
    exact = to_fraction(w) * pwmset.fmt.scale
    return math.ceil(exact - pwmset.loss)


def classical_match(pwmset: PwmSet, seq: Sequence, w_th: RealLike) -> MatchSet:
    """All (k, i) with w_{k,i} >= w_th, by exhaustive O(Knm) evaluation."""
    scores = score_table(pwmset, seq)
    t = threshold_raw(pwmset, w_th)
    ks, iis = np.nonzero(scores >= t)
    return MatchSet(zip(ks.tolist(), iis.tolist()))


def rescale(pwmset: PwmSet, w_th: RealLike) -> tuple[PwmSet, Fraction]:
    """Affinely map all entries into [0, 1] with the global min/max; move the threshold along."""
    flat = [v for p in pwmset for row in p.values for v in row]
    lo, hi = min(flat), max(flat)
    if hi == lo:
        raise DegenerateInputError("constant PWM set: M_max == M_min, rescaling undefined")
    span = hi - lo
    out = []
    for p in pwmset:
        vals = tuple(tuple((v - lo) / span for v in row) for row in p.values)
        out.append(Pwm(p.alphabet, vals, fmt=p.fmt, rescaled=True, m_min=lo, m_max=hi,
                       name=p.name))
    w_new = (to_fraction(w_th) - pwmset.m * lo) / span
    return PwmSet(out), w_new


def mark_rescaled(pwmset: PwmSet) -> PwmSet:
    """Flag an already-[0,1] set as rescaled (identity map, M_min = 0, M_max = 1)."""
    out = []
    for p in pwmset:
        if any(not 0 <= v <= 1 for row in p.values for v in row):
            raise PreconditionError("entries outside [0, 1]; use rescale()")
        out.append(Pwm(p.alphabet, p.values, fmt=p.fmt, rescaled=True,
                       m_min=Fraction(0), m_max=Fraction(1), name=p.name))
    return PwmSet(out)


def pad_to_uniform_length(pwms: Iterable[Pwm]) -> PwmSet:
    """Append zero rows so every PWM has the maximal length."""
    pwms = list(pwms)
    if not pwms:
        raise PreconditionError("cannot pad an empty list of PWMs")
    m = max(p.m for p in pwms)
    out = []
    for p in pwms:
        if p.m == m:
            out.append(p)
            continue
        zero = tuple(Fraction(0) for _ in p.alphabet)
        out.append(Pwm(p.alphabet, p.values + (zero,) * (m - p.m), fmt=p.fmt,
                       rescaled=p.rescaled, m_min=p.m_min, m_max=p.m_max, name=p.name))
    return PwmSet(out)
