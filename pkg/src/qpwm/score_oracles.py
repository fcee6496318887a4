"""Composed score oracles and the good-state amplitudes they induce.

Two backends compute the same quantities:

* the sparse backend builds the flagged state register by register in a
  :class:`~qpwm.sparse.SparseState` (desk-scale only);
* the analytic backend counts (naive method) or evaluates outcome laws in
  closed form (QMCI method) and scales to real instance sizes.

Register layout of the naive flagged state: ``k, i`` index registers,
``j, l, s, mval, w`` the iterative score workspace (loop counter, sequence
position, symbol, PWM entry, accumulated score), then ``wth`` (threshold),
``cmp`` (comparator bit), ``op`` (exclusion bit) and ``flag`` (their AND).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .amplitude_engines import EST_TOL, QmciParams, ae_estimates, ae_masses, median_cdf, qmci_tail
from .errors import PreconditionError, RangeError
from .fixed_point import FxValue, RealLike, o_add, o_comp, xor_raw
from .pwm_core import (
    IndexPair,
    MatchSet,
    PwmSet,
    Sequence,
    n_positions,
    score_table,
    threshold_raw,
)
from .qram_oracles import DEFAULT_KAPPA, ExclusionTable, QueryLedger, build_qrams
from .sparse import DEFAULT_STATE_CAP, SparseState
from .thresholds import SoftHardThresholds

SCORE_REGISTERS = ("k", "i", "j", "l", "s", "mval", "w")
FLAG_REGISTERS = ("wth", "cmp", "op", "flag")
QMCI_REGISTERS = ("k", "i", "est", "cmp", "op", "flag")


@dataclass
class OracleSet:
    """The three QRAM oracles of one instance, sharing a ledger."""

    seq: Sequence
    pwmset: PwmSet
    kappa: int = DEFAULT_KAPPA
    ledger: QueryLedger | None = None

    def __post_init__(self):
        if self.pwmset.alphabet != self.seq.alphabet:
            raise PreconditionError("sequence and PWM alphabets differ")
        if self.seq.n < self.pwmset.m:
            raise PreconditionError("sequence shorter than the PWM length")
        self.qseq, self.qpwm, self.table, self.ledger = build_qrams(
            self.seq, self.pwmset, self.kappa, self.ledger
        )

    @property
    def K(self) -> int:
        return self.pwmset.K

    @property
    def m(self) -> int:
        return self.pwmset.m

    @property
    def n(self) -> int:
        return self.seq.n

    @property
    def n_sup(self) -> int:
        return n_positions(self.seq, self.pwmset.m)


@dataclass(frozen=True)
class GoodStateAmplitude:
    a: Fraction | float
    n_remaining: int | None = None
    normaliser: int | None = None

    def __post_init__(self):
        if not 0 <= self.a <= 1 + 1e-12:
            raise PreconditionError(f"amplitude mass {self.a} outside [0, 1]")

    def __float__(self):
        return float(self.a)


def _check_position(oracles: OracleSet, i: int):
    if not 0 <= i < oracles.n_sup:
        raise RangeError(f"position {i} outside [0, {oracles.n_sup})")


def _excluded_bit(excluded, k: int, i: int) -> int:
    """O_P output: 0 iff (k, i) is excluded, from a table or a plain pair set."""
    if isinstance(excluded, ExclusionTable):
        return excluded.lookup(k, i)
    return int((k, i) not in excluded)


def sc_one(oracles: OracleSet, k: int, i: int, j: int) -> FxValue:
    """O_sc,one: M_k(j, s_{i+j}); one O_seq and one O_PWM query."""
    if not 0 <= i + j < oracles.n or not 0 <= j < oracles.m:
        raise RangeError(f"(i, j) = ({i}, {j}) outside the sequence or PWM")
    s = oracles.qseq.query(i + j)
    return oracles.qpwm.query(k, j, s)


def apply_score_iteration(state: SparseState, oracles: OracleSet):
    """Iterative score circuit on whatever (k, i) superposition ``state`` holds.

    Per position j: s ^= s_l, mval ^= M_k(j, s), w += mval; on every
    iteration but the last, mval and s are uncomputed and j, l advanced.
    Basis lookups are free; the caller charges the ledger per application.
    """
    fmt = oracles.pwmset.fmt
    qseq, qpwm, m = oracles.qseq, oracles.qpwm, oracles.m
    state.apply_on(("i", "l"), lambda i, l: (i, l ^ i))
    for step in range(m):
        state.apply_on(("l", "s"), lambda l, s: (l, s ^ qseq.lookup(l)))
        state.apply_on(("k", "j", "s", "mval"),
                       lambda k, j, s, v: (k, j, s, xor_raw(v, qpwm.lookup_raw(k, j, s), fmt)))
        state.apply_on(("mval", "w"), lambda v, w: o_add(v, w, fmt))
        if step < m - 1:
            state.apply_on(("k", "j", "s", "mval"),
                           lambda k, j, s, v: (k, j, s, xor_raw(v, qpwm.lookup_raw(k, j, s), fmt)))
            state.apply_on(("l", "s"), lambda l, s: (l, s ^ qseq.lookup(l)))
            state.apply_on(("j", "l"), lambda j, l: (j + 1, l + 1))
    return state


def naive_score_circuit(oracles: OracleSet, k: int, i: int,
                        state: SparseState | None = None) -> SparseState:
    """Run the iterative score circuit from |k>|i>|0>|i>|0>|0>|0>; register w ends at w_{k,i}."""
    _check_position(oracles, i)
    if not 0 <= k < oracles.K:
        raise RangeError(f"PWM index {k} outside [0, {oracles.K})")
    if state is None:
        state = SparseState(SCORE_REGISTERS)
    state.apply_on(("k", "i"), lambda _k, _i: (k, i))
    apply_score_iteration(state, oracles)
    oracles.ledger.charge(seq=oracles.m, pwm=oracles.m)
    return state


def build_flagged_state_naive(oracles: OracleSet, w_th: RealLike, excluded=None,
                              cap: int = DEFAULT_STATE_CAP, charge: bool = True) -> SparseState:
    """V|0> for the naive method: equiprobable (k, i), score, comparator, exclusion bit, AND flag.

    ``excluded`` is the set of already found pairs (an ``ExclusionTable`` or
    any container of pairs); it defaults to the oracle set's own table.
    """
    excluded = oracles.table if excluded is None else excluded
    t = threshold_raw(oracles.pwmset, w_th)
    fmt = oracles.pwmset.fmt
    K, n_sup = oracles.K, oracles.n_sup
    state = SparseState(SCORE_REGISTERS + FLAG_REGISTERS, cap=cap)
    state.prepare("k", {k: Fraction(1, K) for k in range(K)})
    state.prepare("i", {i: Fraction(1, n_sup) for i in range(n_sup)})
    apply_score_iteration(state, oracles)
    state.apply_on(("wth",), lambda v: (xor_raw(v, t, fmt),))
    state.apply_on(("w", "wth", "cmp"), lambda w, th, b: o_comp(w, th, b, fmt))
    state.apply_on(("k", "i", "op"), lambda k, i, b: (k, i, b ^ _excluded_bit(excluded, k, i)))
    state.apply_on(("cmp", "op", "flag"), lambda c, o, f: (c, o, f ^ (c & o)))
    if charge:
        oracles.ledger.charge(seq=oracles.m, pwm=oracles.m, p=1)
    return state


def flagged_mass(state: SparseState):
    return state.register_probability("flag", 1)


def good_amplitude_naive(pwmset: PwmSet, seq: Sequence, excluded, w_th: RealLike,
                         scores: np.ndarray | None = None) -> GoodStateAmplitude:
    """a = |P_sol minus excluded| / (K N_sup), counted classically."""
    scores = score_table(pwmset, seq) if scores is None else scores
    t = threshold_raw(pwmset, w_th)
    ks, iis = np.nonzero(scores >= t)
    remaining = sum(1 for k, i in zip(ks.tolist(), iis.tolist()) if (k, i) not in excluded)
    total = int(scores.size)
    return GoodStateAmplitude(Fraction(remaining, total), remaining, total)


def score_means(pwmset: PwmSet, seq: Sequence, scores: np.ndarray | None = None) -> np.ndarray:
    """mu_{k,i} = w_{k,i} / m, the mean the QMCI oracle estimates."""
    if not pwmset.rescaled:
        raise PreconditionError("the QMCI method needs a rescaled PWM set")
    scores = score_table(pwmset, seq) if scores is None else scores
    return scores / pwmset.fmt.scale / pwmset.m


def qmci_gamma_squared(mu: np.ndarray, thresholds: SoftHardThresholds, m: int,
                       params: QmciParams) -> np.ndarray:
    """gamma^2 = P(median of J estimates of mu >= w_mid / m), for each mu."""
    mu = np.clip(np.asarray(mu, dtype=float), 0.0, 1.0)
    uniq, inv = np.unique(mu, return_inverse=True)
    g = qmci_tail(uniq, thresholds.w_mid / m, params)
    return np.asarray(g)[inv].reshape(mu.shape)


class QmciAmplitudeTable:
    """gamma^2_{k,i} for every pair, with the flagged mass of any exclusion set."""

    def __init__(self, gamma2: np.ndarray):
        self.gamma2 = np.asarray(gamma2, dtype=float)
        self.normaliser = int(self.gamma2.size)
        self._active = np.ones(self.gamma2.shape, dtype=bool)

    @classmethod
    def build(cls, pwmset: PwmSet, seq: Sequence, thresholds: SoftHardThresholds,
              params: QmciParams, scores: np.ndarray | None = None) -> "QmciAmplitudeTable":
        mu = score_means(pwmset, seq, scores)
        return cls(qmci_gamma_squared(mu, thresholds, pwmset.m, params))

    def exclude(self, pair):
        self._active[pair[0], pair[1]] = False

    def amplitude(self, excluded=None) -> GoodStateAmplitude:
        active = self._active
        if excluded is not None:
            active = np.ones(self.gamma2.shape, dtype=bool)
            for k, i in excluded:
                active[k, i] = False
        a = float(np.sum(self.gamma2[active])) / self.normaliser
        return GoodStateAmplitude(min(a, 1.0), int(np.count_nonzero(active & (self.gamma2 > 0))),
                                  self.normaliser)

    def sample(self, rng: np.random.Generator) -> IndexPair:
        """(k, i) drawn proportionally to gamma^2 over the non-excluded pairs."""
        w = np.where(self._active, self.gamma2, 0.0).ravel()
        flat = int(rng.choice(w.size, p=w / w.sum()))
        k, i = np.unravel_index(flat, self.gamma2.shape)
        return IndexPair(int(k), int(i))


def qmci_good_amplitude(pwmset: PwmSet, seq: Sequence, excluded, thresholds: SoftHardThresholds,
                        params: QmciParams) -> GoodStateAmplitude:
    """|beta_1|^2 = sum over non-excluded (k, i) of gamma^2_{k,i}, over K N_sup."""
    return QmciAmplitudeTable.build(pwmset, seq, thresholds, params).amplitude(MatchSet(excluded))


def build_flagged_state_qmci(oracles: OracleSet, thresholds: SoftHardThresholds,
                             params: QmciParams, excluded=None,
                             cap: int = DEFAULT_STATE_CAP, charge: bool = True) -> SparseState:
    """Sparse counterpart of :func:`qmci_good_amplitude`.

    The outcome register ``est`` holds the index l of the median estimate
    sin^2(pi l / M), prepared per (k, i) with the median-of-J law; the
    comparator tests it against w_mid / m.
    """
    excluded = oracles.table if excluded is None else excluded
    K, n_sup, m = oracles.K, oracles.n_sup, oracles.m
    scores = score_table(oracles.pwmset, oracles.seq)
    mu = score_means(oracles.pwmset, oracles.seq, scores)
    est = ae_estimates(params.M)
    masses = ae_masses(np.clip(mu.ravel(), 0.0, 1.0), params.M)
    med = np.diff(median_cdf(np.cumsum(masses, axis=1), params.J), axis=1, prepend=0.0)
    med = med.reshape(K, n_sup, -1)
    thr = thresholds.w_mid / m - EST_TOL
    state = SparseState(QMCI_REGISTERS, cap=cap)
    state.prepare("k", {k: 1.0 / K for k in range(K)})
    state.prepare("i", {i: 1.0 / n_sup for i in range(n_sup)})
    state.prepare_conditional(
        "est",
        lambda b: {l: float(p) for l, p in enumerate(med[b[0], b[1]]) if p > 0},
        est.size,
    )
    state.apply_on(("est", "cmp"), lambda l, c: (l, c ^ int(est[l] >= thr)))
    state.apply_on(("k", "i", "op"), lambda k, i, b: (k, i, b ^ _excluded_bit(excluded, k, i)))
    state.apply_on(("cmp", "op", "flag"), lambda c, o, f: (c, o, f ^ (c & o)))
    if charge:
        oracles.ledger.charge(seq=params.oracle_calls, pwm=params.oracle_calls, p=1)
    return state
