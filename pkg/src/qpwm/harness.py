"""Experiment configuration, trial orchestration, aggregation and result files.

A configuration is a flat ``key = value`` text file; command-line overrides
replace individual keys.  Trial t of an experiment with master seed s draws
from a Philox stream seeded by ``SeedSequence([s, t])``, so results do not
depend on how trials are spread over worker processes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import PreconditionError, QpwmError
from .fixed_point import FixedPointFormat, to_fraction
from .io import parse_background, parse_fasta, parse_pwm_files
from .matchers import (
    BACKENDS,
    MatchReport,
    ProblemInstance,
    ScalingFit,
    complexity_report,
    run_naive_iteration,
    run_qmci_method,
)
from .pwm_core import MatchSet, PwmSet, Sequence, classical_match, rescale
from .qram_oracles import QueryLedger
from .synth import generate_synthetic
from .thresholds import (
    SoftHardThresholds,
    exact_score_distribution,
    moment_summary,
    pvalue_threshold,
    soft_hard_thresholds,
)

LEDGER_KEYS = tuple(f.name for f in fields(QueryLedger))
THRESHOLD_MODES = ("explicit", "pvalue", "sigma")
ALGORITHMS = ("naive", "qmci")
SWEEP_AXES = ("n", "m", "K", "n_sol", "gap")


def stream(*keys: int) -> np.random.Generator:
    """Philox generator keyed by a tuple of nonnegative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(keys))))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return stream(seed, trial)


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise PreconditionError(f"config line {lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def _opt_float(v):
    return None if v in (None, "") else float(v)


@dataclass
class ExperimentConfig:
    algorithm: str = "naive"
    fasta: str | None = None
    pwm: tuple[str, ...] = ()
    background: str = "uniform"
    threshold_mode: str = "explicit"
    w_th: str | None = None
    w_soft: str | None = None
    w_hard: str | None = None
    pvalue: float | None = None
    x_soft: float | None = None
    x_hard: float | None = None
    trials: int = 1
    seed: int = 0
    backend: str = "analytic"
    int_bits: int = 16
    frac_bits: int = 32
    kappa: int = 4
    delta: float = 0.05
    workers: int = 1
    synth_n: int = 1024
    synth_m: int = 8
    synth_K: int = 1
    synth_n_hard: int = 2
    synth_n_soft: int = 0
    synth_seed: int = 0
    sweep_axis: str | None = None
    sweep_grid: tuple[float, ...] = ()
    gate_min_success: float | None = None
    gate_slope_low: float | None = None
    gate_slope_high: float | None = None

    KEY_ALIASES = {
        "fixed_point.int_bits": "int_bits", "fixed_point.frac_bits": "frac_bits",
        "synth.n": "synth_n", "synth.m": "synth_m", "synth.K": "synth_K",
        "synth.n_hard": "synth_n_hard", "synth.n_soft": "synth_n_soft",
        "synth.seed": "synth_seed", "sweep.axis": "sweep_axis", "sweep.grid": "sweep_grid",
        "gate.min_success": "gate_min_success", "gate.slope_low": "gate_slope_low",
        "gate.slope_high": "gate_slope_high",
    }

    def __post_init__(self):
        if isinstance(self.pwm, str):
            self.pwm = tuple(p.strip() for p in self.pwm.split(",") if p.strip())
        self.pwm = tuple(self.pwm)
        if isinstance(self.sweep_grid, str):
            self.sweep_grid = tuple(float(v) for v in self.sweep_grid.split(",") if v.strip())
        self.sweep_grid = tuple(float(v) for v in self.sweep_grid)
        if self.sweep_axis == "":
            self.sweep_axis = None
        for name in ("trials", "seed", "int_bits", "frac_bits", "kappa", "workers", "synth_n",
                     "synth_m", "synth_K", "synth_n_hard", "synth_n_soft", "synth_seed"):
            setattr(self, name, int(getattr(self, name)))
        for name in ("pvalue", "x_soft", "x_hard", "gate_min_success", "gate_slope_low",
                     "gate_slope_high"):
            setattr(self, name, _opt_float(getattr(self, name)))
        self.delta = float(self.delta)
        for name in ("w_th", "w_soft", "w_hard"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, str(v))
        self.validate()

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise PreconditionError(f"algorithm must be one of {ALGORITHMS}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise PreconditionError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.backend not in BACKENDS:
            raise PreconditionError(f"backend must be one of {BACKENDS}")
        if self.trials < 1:
            raise PreconditionError("trials must be >= 1")
        if self.workers < 1:
            raise PreconditionError("workers must be >= 1")
        given = {
            "explicit": self.w_th is not None or self.w_soft is not None or self.w_hard is not None,
            "pvalue": self.pvalue is not None,
            "sigma": self.x_soft is not None or self.x_hard is not None,
        }
        if sum(given.values()) != 1 or not given[self.threshold_mode]:
            raise PreconditionError(
                f"exactly one threshold mode must be set, matching threshold_mode="
                f"{self.threshold_mode!r}; got values for {[k for k, v in given.items() if v]}"
            )
        if self.algorithm == "qmci" and self.threshold_mode == "pvalue":
            raise PreconditionError("the QMCI method needs soft/hard thresholds (explicit or sigma)")
        if self.algorithm == "qmci" and self.threshold_mode == "explicit" and (
                self.w_soft is None or self.w_hard is None):
            raise PreconditionError("the QMCI method needs both w_soft and w_hard")
        if self.algorithm == "naive" and self.threshold_mode == "explicit" and self.w_th is None:
            raise PreconditionError("the naive method needs w_th")
        if self.algorithm == "naive" and self.threshold_mode == "sigma" and self.x_hard is None:
            raise PreconditionError("sigma mode for the naive method uses x_hard as threshold")
        if self.algorithm == "qmci" and self.threshold_mode == "sigma" and (
                self.x_soft is None or self.x_hard is None):
            raise PreconditionError("sigma mode for the QMCI method needs x_soft and x_hard")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise PreconditionError(f"sweep axis must be one of {SWEEP_AXES}")
            if len(self.sweep_grid) < 3:
                raise PreconditionError("a scaling sweep needs >= 3 grid values")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any],
                     overrides: Mapping[str, Any] | None = None) -> "ExperimentConfig":
        merged: dict[str, Any] = {}
        names = {f.name for f in fields(cls)}
        for src in (values, overrides or {}):
            for key, v in src.items():
                if v is None:
                    continue
                name = cls.KEY_ALIASES.get(key, key.replace("-", "_"))
                if name not in names:
                    raise PreconditionError(f"unknown config key {key!r}")
                merged[name] = v
        return cls(**merged)

    @classmethod
    def load(cls, path, overrides: Mapping[str, Any] | None = None) -> "ExperimentConfig":
        return cls.from_mapping(parse_config_text(Path(path).read_text()), overrides)

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["pwm"] = list(self.pwm)
        d["sweep_grid"] = list(self.sweep_grid)
        return d

    def digest(self) -> str:
        canon = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @property
    def fmt(self) -> FixedPointFormat:
        return FixedPointFormat(self.int_bits, self.frac_bits)


@dataclass
class Workload:
    """A ready-to-run instance plus its classical ground truth."""

    instance: ProblemInstance
    truth_hard: MatchSet
    truth_soft: MatchSet
    thresholds_original: dict[str, str]


def _affine(w: Fraction, lo: Fraction, hi: Fraction, m: int) -> Fraction:
    return (w - m * lo) / (hi - lo)


def _dec(x) -> str:
    return repr(float(x))


def _load_inputs(cfg: ExperimentConfig) -> tuple[PwmSet, Sequence]:
    if cfg.fasta and cfg.pwm:
        pwmset = parse_pwm_files(cfg.pwm, cfg.fmt)
        seq = parse_fasta(cfg.fasta, pwmset.alphabet)
        return pwmset, seq
    if cfg.fasta or cfg.pwm:
        raise PreconditionError("give both fasta and pwm, or neither (synthetic input)")
    rng = stream(cfg.synth_seed)
    inst = generate_synthetic(rng, cfg.synth_n, cfg.synth_m, cfg.synth_K,
                              cfg.synth_n_hard, cfg.synth_n_soft, fmt=cfg.fmt)
    return inst.pwmset, inst.seq


def _original_thresholds(cfg: ExperimentConfig, pwmset: PwmSet) -> dict[str, Fraction]:
    """Thresholds on the input scale; with several PWMs the strictest per-PWM value is used."""
    if cfg.threshold_mode == "explicit":
        out = {}
        for key in ("w_th", "w_soft", "w_hard"):
            if getattr(cfg, key) is not None:
                out[key] = to_fraction(getattr(cfg, key))
        return out
    bg = parse_background(cfg.background, len(pwmset.alphabet))
    if cfg.threshold_mode == "pvalue":
        ws = [pvalue_threshold(exact_score_distribution(p, bg), cfg.pvalue).to_fraction()
              for p in pwmset]
        return {"w_th": max(ws)}
    sums = [moment_summary(p, bg) for p in pwmset]
    if cfg.algorithm == "naive":
        return {"w_th": max(Fraction(s.mu_tilde + cfg.x_hard * s.s_m) for s in sums)}
    ths = [soft_hard_thresholds(s, cfg.x_soft, cfg.x_hard) for s in sums]
    return {"w_soft": max(Fraction(t.w_soft) for t in ths),
            "w_hard": max(Fraction(t.w_hard) for t in ths)}


def build_workload(cfg: ExperimentConfig, pwmset: PwmSet | None = None,
                   seq: Sequence | None = None) -> Workload:
    if pwmset is None or seq is None:
        pwmset, seq = _load_inputs(cfg)
    orig = _original_thresholds(cfg, pwmset)
    if pwmset.rescaled:
        scaled, lo, hi = pwmset, Fraction(0), Fraction(1)
    else:
        scaled, _ = rescale(pwmset, 0)
        lo, hi = scaled[0].m_min, scaled[0].m_max
    w = {k: _affine(v, lo, hi, pwmset.m) for k, v in orig.items()}
    shown = {k: _dec(v) for k, v in orig.items()}
    if cfg.algorithm == "naive":
        inst = ProblemInstance(scaled, seq, w_th=w["w_th"], kappa=cfg.kappa, delta=cfg.delta)
        truth = classical_match(scaled, seq, w["w_th"])
        return Workload(inst, truth, truth, shown)
    th = SoftHardThresholds(float(w["w_soft"]), float(w["w_hard"]))
    inst = ProblemInstance(scaled, seq, thresholds=th, kappa=cfg.kappa, delta=cfg.delta)
    return Workload(inst, classical_match(scaled, seq, th.w_hard),
                    classical_match(scaled, seq, th.w_soft), shown)


def judge(report: MatchReport, wl: Workload) -> bool:
    """Naive: output equals the solution set.  QMCI: hard set within output within soft set."""
    if report.method == "naive":
        return report.found == wl.truth_hard
    return wl.truth_hard.issubset(report.found) and report.found.issubset(wl.truth_soft)


def run_trial(inst: ProblemInstance, method: str, backend: str, seed: int,
              trial: int) -> MatchReport:
    rng = trial_rng(seed, trial)
    fn = run_naive_iteration if method == "naive" else run_qmci_method
    return fn(inst, rng, backend)


def _run_one(args):
    return run_trial(*args).as_dict()


def run_trials(inst: ProblemInstance, method: str, backend: str, seed: int, trials: int,
               workers: int = 1, sink: list | None = None) -> list[MatchReport]:
    """Run trials 0..trials-1; each finished report is also appended to ``sink``."""
    sink = [] if sink is None else sink
    start = len(sink)
    jobs = [(inst, method, backend, seed, t) for t in range(trials)]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for d in pool.map(_run_one, jobs):
                sink.append(MatchReport.from_dict(d))
    else:
        for job in jobs:
            sink.append(run_trial(*job))
    return sink[start:]


def ledger_statistics(reports: list[MatchReport]) -> dict[str, dict[str, float]]:
    out = {}
    for key in LEDGER_KEYS:
        vals = np.array([r.ledger[key] for r in reports], dtype=float)
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        out[key] = {"median": float(med), "iqr": float(q3 - q1)}
    return out


@dataclass
class ResultRecord:
    config_digest: str
    config: dict[str, Any]
    reports: list[MatchReport]
    correct: list[bool]
    thresholds: dict[str, str] = field(default_factory=dict)
    scaling: ScalingFit | None = None
    gates: dict[str, bool] = field(default_factory=dict)
    error: str | None = None

    @property
    def success_rate(self) -> float:
        return sum(self.correct) / len(self.correct) if self.correct else 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.gates.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "config_digest": self.config_digest,
            "config": self.config,
            "thresholds": self.thresholds,
            "trials": len(self.reports),
            "success_rate": self.success_rate,
            "correct": list(self.correct),
            "ledger_stats": ledger_statistics(self.reports) if self.reports else {},
            "scaling": self.scaling.as_dict() if self.scaling else None,
            "gates": self.gates,
            "passed": self.passed,
            "error": self.error,
            "reports": [r.as_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=1)


def trials_csv(reports: list[MatchReport], correct: list[bool]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "status", "correct", "n_found", "rounds", *LEDGER_KEYS])
    for t, (r, ok) in enumerate(zip(reports, correct)):
        w.writerow([t, r.status, int(ok), len(r.found), len(r.rounds),
                    *(r.ledger[k] for k in LEDGER_KEYS)])
    return buf.getvalue()


def read_trials_csv(text: str) -> list[dict[str, Any]]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rec: dict[str, Any] = {"trial": int(row["trial"]), "status": row["status"],
                               "correct": bool(int(row["correct"])),
                               "n_found": int(row["n_found"]), "rounds": int(row["rounds"])}
        rec.update({k: int(row[k]) for k in LEDGER_KEYS})
        rows.append(rec)
    return rows


def write_outputs(record: ResultRecord, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jp, cp = out / "result.json", out / "trials.csv"
    jp.write_text(record.to_json())
    cp.write_text(trials_csv(record.reports, record.correct))
    return jp, cp


def _sweep_workload(cfg: ExperimentConfig, value: float) -> Workload:
    """Synthetic workload with one size parameter set to ``value``."""
    n, m, K = cfg.synth_n, cfg.synth_m, cfg.synth_K
    n_hard, n_soft = cfg.synth_n_hard, cfg.synth_n_soft
    axis = cfg.sweep_axis
    if axis == "n":
        n = int(value)
    elif axis == "m":
        m = int(value)
    elif axis == "K":
        K = int(value)
    elif axis == "n_sol":
        n_hard = int(value)
    inst = generate_synthetic(stream(cfg.synth_seed, int(value)), n, m, K, n_hard, n_soft,
                              fmt=cfg.fmt)
    sub = replace(cfg, sweep_axis=None, sweep_grid=())
    if axis == "gap":
        if cfg.algorithm != "qmci" or cfg.threshold_mode != "explicit":
            raise PreconditionError("a gap sweep needs the QMCI method with explicit w_soft/w_hard")
        # keep w_mid and scale the gap around it
        mid = (to_fraction(cfg.w_soft) + to_fraction(cfg.w_hard)) / 2
        half = to_fraction(value) / 2
        sub = replace(sub, w_soft=str(mid - half), w_hard=str(mid + half))
    return build_workload(sub, inst.pwmset, inst.seq)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ResultRecord:
    """Run all trials (or a scaling sweep), judge each against the classical oracle, write files."""
    record = ResultRecord(cfg.digest(), cfg.as_dict(), [], [])
    step = "setup"
    try:
        if cfg.sweep_axis is None:
            wl = build_workload(cfg)
            record.thresholds = wl.thresholds_original
            step = "trials"
            run_trials(wl.instance, cfg.algorithm, cfg.backend, cfg.seed, cfg.trials,
                       cfg.workers, sink=record.reports)
            record.correct = [judge(r, wl) for r in record.reports]
        else:
            groups = {}
            for v in cfg.sweep_grid:
                step = f"sweep {cfg.sweep_axis}={v:g}"
                wl = _sweep_workload(cfg, v)
                reps = run_trials(wl.instance, cfg.algorithm, cfg.backend, cfg.seed,
                                  cfg.trials, cfg.workers, sink=record.reports)
                groups[v] = reps
                record.correct.extend(judge(r, wl) for r in reps)
            step = "scaling fit"
            record.scaling = complexity_report(groups, cfg.sweep_axis)
    except (QpwmError, ValueError, OSError) as exc:
        # keep whatever finished; judged trials stay aligned with their reports
        record.error = f"{step}: {type(exc).__name__}: {exc}"
        del record.reports[len(record.correct):]
    if cfg.gate_min_success is not None and record.correct:
        record.gates["min_success"] = record.success_rate >= cfg.gate_min_success
    if record.scaling is not None:
        if cfg.gate_slope_low is not None:
            record.gates["slope_low"] = record.scaling.slope >= cfg.gate_slope_low
        if cfg.gate_slope_high is not None:
            record.gates["slope_high"] = record.scaling.slope <= cfg.gate_slope_high
    if out_dir is not None:
        write_outputs(record, out_dir)
    return record
