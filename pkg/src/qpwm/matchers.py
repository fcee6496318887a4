"""End-to-end matchers: the naive iteration method and the QMCI-based method.

Both loop amplitude-amplified searches over a flagged state whose good
subspace is "not yet found and matching", appending every measured pair to
the exclusion table until a search fails.  The good-subspace mass comes from
the analytic backend by default or from a freshly built sparse state
(``backend="sparse"``) on small instances.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .amplitude_engines import GoodSubspace, QaaParams, make_qmci_params, qsearch
from .errors import PreconditionError
from .fixed_point import RealLike
from .pwm_core import IndexPair, MatchSet, PwmSet, Sequence, score_segment, score_table, threshold_raw
from .qram_oracles import DEFAULT_KAPPA
from .score_oracles import (
    OracleSet,
    QmciAmplitudeTable,
    build_flagged_state_naive,
    build_flagged_state_qmci,
    flagged_mass,
)
from .thresholds import SoftHardThresholds

BACKENDS = ("analytic", "sparse")


@dataclass
class ProblemInstance:
    pwmset: PwmSet
    seq: Sequence
    w_th: RealLike | None = None
    thresholds: SoftHardThresholds | None = None
    kappa: int = DEFAULT_KAPPA
    delta: float = 0.05

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise PreconditionError("delta must lie in (0, 1)")
        if self.seq.n < self.pwmset.m:
            raise PreconditionError("sequence shorter than the PWM length")
        if self.thresholds is not None:
            self.thresholds.check(self.pwmset.m)

    @property
    def K(self) -> int:
        return self.pwmset.K

    @property
    def n(self) -> int:
        return self.seq.n

    @property
    def m(self) -> int:
        return self.pwmset.m

    @property
    def n_sup(self) -> int:
        return self.seq.n - self.pwmset.m + 1


@dataclass
class RoundLog:
    a: str
    outcome: str
    queries: int
    pair: tuple[int, int] | None = None
    score: str | None = None
    accepted: bool | None = None

    def as_dict(self) -> dict[str, Any]:
        d = {"a": self.a, "outcome": self.outcome, "queries": self.queries}
        if self.pair is not None:
            d["pair"] = list(self.pair)
        if self.score is not None:
            d["score"] = self.score
        if self.accepted is not None:
            d["accepted"] = self.accepted
        return d


@dataclass
class MatchReport:
    method: str
    found: MatchSet
    ledger: dict[str, int]
    rounds: list[RoundLog] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "matches" if len(self.found) else "no-match"

    def as_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "status": self.status,
            "found": self.found.to_list(),
            "ledger": dict(self.ledger),
            "rounds": [r.as_dict() for r in self.rounds],
            "params": dict(self.params),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MatchReport":
        rounds = [RoundLog(r["a"], r["outcome"], r["queries"],
                           tuple(r["pair"]) if "pair" in r else None,
                           r.get("score"), r.get("accepted")) for r in d["rounds"]]
        return cls(d["method"], MatchSet(d["found"]), dict(d["ledger"]), rounds, dict(d["params"]))


def _check_backend(backend: str):
    if backend not in BACKENDS:
        raise PreconditionError(f"unknown backend {backend!r}; choose one of {BACKENDS}")


def _search_gamma(size: int) -> float:
    # a single superposed pair leaves no room below 1; a in {0, 1} is then decided by one step
    return 1.0 / size if size > 1 else 0.5


def _fmt_amplitude(a) -> str:
    return str(a) if isinstance(a, Fraction) else repr(float(a))


def run_naive_iteration(inst: ProblemInstance, rng: np.random.Generator,
                        backend: str = "analytic") -> MatchReport:
    """Find every (k, i) with w_{k,i} >= w_th by repeated amplitude-amplified search."""
    _check_backend(backend)
    if inst.w_th is None:
        raise PreconditionError("the naive method needs a single threshold w_th")
    oracles = OracleSet(inst.seq, inst.pwmset, inst.kappa)
    ledger, table = oracles.ledger, oracles.table
    K, m, n, N = inst.K, inst.m, inst.n, inst.n_sup
    scores = score_table(inst.pwmset, inst.seq)
    remaining = scores >= threshold_raw(inst.pwmset, inst.w_th)
    params = QaaParams(_search_gamma(K * N), inst.delta / (K * n))

    def charge(cost: int):
        ledger.charge(seq=m * cost, pwm=m * cost, p=cost)

    found: list[IndexPair] = []
    rounds: list[RoundLog] = []
    while True:
        if backend == "sparse":
            state = build_flagged_state_naive(oracles, inst.w_th, charge=False)
            a = flagged_mass(state)
            ki = (state.index("k"), state.index("i"))
            flag = state.index("flag")

            def sample(g, state=state):
                b = state.sample(g, lambda b: b[flag] == 1)
                return IndexPair(b[ki[0]], b[ki[1]])
        else:
            count = int(np.count_nonzero(remaining))
            a = Fraction(count, K * N)

            def sample(g):
                ks, iis = np.nonzero(remaining)
                pick = int(g.integers(0, ks.size))
                return IndexPair(int(ks[pick]), int(iis[pick]))

        out = qsearch(GoodSubspace(float(a), sample), params, rng, charge)
        rounds.append(RoundLog(_fmt_amplitude(a), out.status, out.queries,
                               tuple(out.label) if out.success else None))
        if not out.success:
            break
        pair = out.label
        if not remaining[pair.k, pair.i]:
            raise AssertionError(f"search returned {pair}, which is not a pending solution")
        table.insert(pair)
        remaining[pair.k, pair.i] = False
        found.append(pair)

    info = {
        "backend": backend,
        "gamma": repr(params.gamma),
        "delta_round": repr(params.delta),
        "K": K, "n": n, "m": m, "n_sup": N,
        "norm_superposed": K * N,
        "norm_literal": K * n,
        "w_th": inst.pwmset.fmt.raw_to_decimal(threshold_raw(inst.pwmset, inst.w_th)),
    }
    return MatchReport("naive", MatchSet(found), ledger.snapshot(), rounds, info)


def qmci_settings(inst: ProblemInstance):
    """(epsilon', delta', delta'', QmciParams) of the QMCI method for this instance."""
    th = inst.thresholds
    K, n, m = inst.K, inst.n, inst.m
    eps = th.gap / (2 * m)
    d1 = inst.delta / (4 * K * K * n * n)
    d2 = inst.delta / (2 * K * n)
    return eps, d1, d2, make_qmci_params(eps, d1)


def run_qmci_method(inst: ProblemInstance, rng: np.random.Generator,
                    backend: str = "analytic") -> MatchReport:
    """Find every pair above w_hard and nothing below w_soft, via QMCI score estimates."""
    _check_backend(backend)
    if inst.thresholds is None:
        raise PreconditionError("the QMCI method needs soft/hard thresholds")
    if not inst.pwmset.rescaled:
        raise PreconditionError("the QMCI method needs a rescaled PWM set")
    th = inst.thresholds.check(inst.m)
    oracles = OracleSet(inst.seq, inst.pwmset, inst.kappa)
    ledger, table = oracles.ledger, oracles.table
    K, m, n, N = inst.K, inst.m, inst.n, inst.n_sup
    eps, d1, d2, qp = qmci_settings(inst)
    params = QaaParams(_search_gamma(2 * K * N), d2)
    t_soft = threshold_raw(inst.pwmset, th.w_soft)
    calls = qp.oracle_calls
    amps = QmciAmplitudeTable.build(inst.pwmset, inst.seq, th, qp) if backend == "analytic" else None

    def charge(cost: int):
        ledger.charge(seq=calls * cost, pwm=calls * cost, p=cost)

    found: list[IndexPair] = []
    rounds: list[RoundLog] = []
    while True:
        if backend == "sparse":
            state = build_flagged_state_qmci(oracles, th, qp, charge=False)
            a = float(flagged_mass(state))
            ki = (state.index("k"), state.index("i"))
            flag = state.index("flag")

            def sample(g, state=state):
                b = state.sample(g, lambda b: b[flag] == 1)
                return IndexPair(b[ki[0]], b[ki[1]])
        else:
            a = amps.amplitude().a
            sample = amps.sample

        out = qsearch(GoodSubspace(min(float(a), 1.0), sample), params, rng, charge)
        log = RoundLog(_fmt_amplitude(a), out.status, out.queries)
        rounds.append(log)
        if not out.success:
            break
        pair = out.label
        w = score_segment(inst.pwmset[pair.k], inst.seq, pair.i)
        ledger.classical_lookups += m
        log.pair, log.score, log.accepted = tuple(pair), w.to_decimal(), w.raw >= t_soft
        if not log.accepted:
            break
        table.insert(pair)
        if amps is not None:
            amps.exclude(pair)
        found.append(pair)

    info = {
        "backend": backend,
        "gamma": repr(params.gamma),
        "delta": repr(inst.delta),
        "epsilon_prime": repr(eps),
        "delta_prime": repr(d1),
        "delta_double_prime": repr(d2),
        "J": qp.J, "M": qp.M, "t": qp.t,
        "K": K, "n": n, "m": m, "n_sup": N,
        "norm_superposed": K * N,
        "norm_literal": K * n,
        "w_soft": repr(th.w_soft), "w_hard": repr(th.w_hard), "w_mid": repr(th.w_mid),
    }
    return MatchReport("qmci", MatchSet(found), ledger.snapshot(), rounds, info)


@dataclass(frozen=True)
class ScalingFit:
    parameter: str
    counter: str
    values: tuple[float, ...]
    medians: tuple[float, ...]
    slope: float
    intercept: float
    ci_low: float
    ci_high: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "parameter": self.parameter, "counter": self.counter,
            "values": list(self.values), "medians": list(self.medians),
            "slope": self.slope, "intercept": self.intercept,
            "ci": [self.ci_low, self.ci_high],
        }


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def complexity_report(groups: Mapping[float, list[MatchReport]], parameter: str,
                      counter: str = "queries_seq", n_boot: int = 1000,
                      rng: np.random.Generator | None = None) -> ScalingFit:
    """Log-log slope of the median ledger counter against one varied parameter.

    ``groups`` maps each parameter value to the reports of its trials.  The
    confidence interval is a percentile bootstrap over trials within groups.
    """
    if len(groups) < 3:
        raise PreconditionError(f"a scaling fit needs >= 3 sizes, got {len(groups)}")
    rng = np.random.default_rng(0) if rng is None else rng
    xs = np.array(sorted(groups), dtype=float)
    data = [np.array([r.ledger[counter] for r in groups[x]], dtype=float) for x in sorted(groups)]
    if any(d.size == 0 for d in data):
        raise PreconditionError("every size needs at least one report")
    if any(np.any(d <= 0) for d in data):
        raise PreconditionError(f"counter {counter!r} must be positive to fit on a log scale")
    med = np.array([np.median(d) for d in data])
    slope, intercept = _loglog_slope(xs, med)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        bm = [np.median(rng.choice(d, d.size)) for d in data]
        boots[b] = _loglog_slope(xs, np.array(bm))[0]
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return ScalingFit(parameter, counter, tuple(xs.tolist()), tuple(med.tolist()),
                      slope, intercept, float(lo), float(hi))

