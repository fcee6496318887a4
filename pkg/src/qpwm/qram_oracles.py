"""Functional QRAM emulation of the data oracles, with query and cost ledgers.

``lookup`` methods read the backing data without touching the ledger; they
are what a simulator evaluates per basis state.  ``query`` methods are one
oracle application and charge the ledger once, whatever the superposition.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import CapacityError, PreconditionError, RangeError
from .fixed_point import FxValue
from .pwm_core import IndexPair, MatchSet, PwmSet, Sequence

DEFAULT_KAPPA = 4
DUMMY = -1


@dataclass
class QueryLedger:
    queries_seq: int = 0
    queries_pwm: int = 0
    queries_p: int = 0
    init_units: int = 0
    update_units: int = 0
    classical_lookups: int = 0

    def charge(self, seq: int = 0, pwm: int = 0, p: int = 0):
        if min(seq, pwm, p) < 0:
            raise PreconditionError("ledger counters only grow")
        self.queries_seq += seq
        self.queries_pwm += pwm
        self.queries_p += p

    def reset(self):
        for name in self.__dataclass_fields__:
            setattr(self, name, 0)

    def snapshot(self) -> dict[str, int]:
        return asdict(self)

    def copy(self) -> "QueryLedger":
        return QueryLedger(**self.snapshot())


class QramSeq:
    """O_seq: |i>|0> -> |i>|s_i>."""

    def __init__(self, seq: Sequence, ledger: QueryLedger):
        self.seq = seq
        self.ledger = ledger
        self.init_cost = seq.n

    def lookup(self, i: int) -> int:
        if not 0 <= i < self.seq.n:
            raise RangeError(f"sequence index {i} outside [0, {self.seq.n})")
        return int(self.seq.data[i])

    def query(self, i: int) -> int:
        value = self.lookup(i)
        self.ledger.charge(seq=1)
        return value


class QramPwm:
    """O_PWM: |k>|j>|a>|0> -> |k>|j>|a>|M_k(j, a)>."""

    def __init__(self, pwmset: PwmSet, ledger: QueryLedger):
        self.pwmset = pwmset
        self.ledger = ledger
        self.init_cost = pwmset.m * len(pwmset.alphabet) * pwmset.K

    def lookup_raw(self, k: int, j: int, a: int) -> int:
        K, m, A = self.pwmset.raw.shape
        if not (0 <= k < K and 0 <= j < m and 0 <= a < A):
            raise RangeError(f"PWM index ({k}, {j}, {a}) outside [{K}]x[{m}]x[{A}]")
        return int(self.pwmset.raw[k, j, a])

    def lookup(self, k: int, j: int, a: int) -> FxValue:
        return FxValue(self.lookup_raw(k, j, a), self.pwmset.fmt)

    def query(self, k: int, j: int, a: int) -> FxValue:
        value = self.lookup(k, j, a)
        self.ledger.charge(pwm=1)
        return value


class ExclusionTable:
    """kappa slots per sequence position holding found PWM indices, or -1."""

    def __init__(self, n: int, kappa: int, ledger: QueryLedger):
        if kappa < 1:
            raise PreconditionError("kappa must be >= 1")
        self.n = n
        self.kappa = kappa
        self.ledger = ledger
        self.slots = np.full((n, kappa), DUMMY, dtype=np.int64)
        self.init_cost = kappa * n
        self._touched: list[tuple[int, int]] = []

    def slots_at(self, i: int) -> tuple[int, ...]:
        """The kappa values the table QRAM returns for position i."""
        if not 0 <= i < self.n:
            raise RangeError(f"position {i} outside [0, {self.n})")
        return tuple(int(v) for v in self.slots[i])

    def contains(self, k: int, i: int) -> bool:
        return k in self.slots_at(i)

    def __contains__(self, pair) -> bool:
        k, i = pair
        return self.contains(k, i)

    def lookup(self, k: int, i: int) -> int:
        """O_P output bit: 0 iff (k, i) is already excluded.

        Evaluated as kappa inequality flags followed by their AND, kept
        separate so the per-slot flags are visible to tests.
        """
        flags = [int(k != ki) for ki in self.slots_at(i)]
        return int(all(flags))

    def query(self, k: int, i: int) -> int:
        bit = self.lookup(k, i)
        self.ledger.charge(p=1)
        return bit

    def insert(self, pair) -> None:
        k, i = pair
        row = self.slots_at(i)
        if k in row:
            raise PreconditionError(f"pair {(k, i)} already excluded")
        free = [s for s, v in enumerate(row) if v == DUMMY]
        if not free:
            raise CapacityError(
                f"position {i} already holds kappa={self.kappa} PWM indices; "
                "more matches per position than the table was sized for"
            )
        self.slots[i, free[0]] = k
        self._touched.append((i, free[0]))
        self.ledger.update_units += 1

    def as_matchset(self) -> MatchSet:
        ii, ss = np.nonzero(self.slots != DUMMY)
        return MatchSet(IndexPair(int(self.slots[i, s]), int(i)) for i, s in zip(ii, ss))

    def reset(self) -> int:
        """Clear only the cells written since the last reset; returns the units spent."""
        units = len(self._touched)
        for i, s in self._touched:
            self.slots[i, s] = DUMMY
        self._touched.clear()
        self.ledger.update_units += units
        return units


def build_qrams(seq: Sequence, pwmset: PwmSet, kappa: int = DEFAULT_KAPPA,
                ledger: QueryLedger | None = None):
    """Load the three QRAMs and record n + m|A|K + kappa n initialisation units."""
    if kappa < 1:
        raise PreconditionError("kappa must be >= 1")
    ledger = QueryLedger() if ledger is None else ledger
    qseq = QramSeq(seq, ledger)
    qpwm = QramPwm(pwmset, ledger)
    table = ExclusionTable(seq.n, kappa, ledger)
    ledger.init_units += qseq.init_cost + qpwm.init_cost + table.init_cost
    return qseq, qpwm, table, ledger


def init_cost_units(n: int, m: int, alphabet_size: int, K: int, kappa: int) -> int:
    return n + m * alphabet_size * K + kappa * n
