"""Command-line entry point: ``python -m qpwm <subcommand>`` or ``qpwm <subcommand>``.

Every subcommand prints one JSON document to stdout.  Fixed-point values
(scores, thresholds) are printed as exact decimal strings; probabilities and
other floats as their shortest round-trip repr strings.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .amplitude_engines import ae_error_bound, make_qmci_params, qmci_estimate_distribution
from .amplitude_engines import qae_distribution
from .errors import QpwmError
from .fixed_point import FixedPointFormat, to_fraction
from .harness import (
    ExperimentConfig,
    build_workload,
    judge,
    parse_config_text,
    run_experiment,
    run_trials,
    stream,
)
from .io import format_pwm, parse_background, parse_fasta, parse_fasta_text, parse_pwm_files, write_fasta
from .pwm_core import MatchSet, classical_match, mark_rescaled, n_positions, score_table, threshold_raw
from .score_oracles import (
    OracleSet,
    build_flagged_state_naive,
    build_flagged_state_qmci,
    flagged_mass,
    good_amplitude_naive,
    naive_score_circuit,
    qmci_good_amplitude,
)
from .synth import generate_synthetic, random_pwmset, random_sequence
from .thresholds import (
    SoftHardThresholds,
    exact_score_distribution,
    moment_summary,
    normal_approx_tail,
    soft_hard_thresholds,
)


def _fx(fmt: FixedPointFormat, x) -> str:
    """A real as the exact decimal of its fixed-point truncation."""
    return fmt.raw_to_decimal(fmt.raw_from_real(x))


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, sort_keys=True, indent=1)
    sys.stdout.write("\n")


def _fmt_from(args) -> FixedPointFormat:
    return FixedPointFormat(args.int_bits, args.frac_bits)


def _load_pwms(args):
    return parse_pwm_files(args.pwm, _fmt_from(args))


def _load_sequence(args, alphabet):
    if args.sequence is not None:
        return parse_fasta_text(args.sequence, alphabet)
    if args.fasta is None:
        raise QpwmError("give --fasta FILE or --sequence TEXT")
    return parse_fasta(args.fasta, alphabet)


def cmd_score(args):
    pwmset = _load_pwms(args)
    seq = _load_sequence(args, pwmset.alphabet)
    table = score_table(pwmset, seq)
    fmt = pwmset.fmt
    positions = range(n_positions(seq, pwmset.m)) if args.position is None else [args.position]
    out = []
    for k in range(pwmset.K):
        for i in positions:
            if not 0 <= i < table.shape[1]:
                raise QpwmError(f"position {i} outside [0, {table.shape[1]})")
            out.append({"k": k, "i": i, "score": fmt.raw_to_decimal(int(table[k, i]))})
    _emit(out)
    return 0


def cmd_thresholds(args):
    pwmset = _load_pwms(args)
    bg = parse_background(args.background, len(pwmset.alphabet))
    out = []
    for pwm in pwmset:
        summ = moment_summary(pwm, bg)
        th = soft_hard_thresholds(summ, args.x_soft, args.x_hard)
        rec = {
            "name": pwm.name,
            "mu_tilde": _fx(pwm.fmt, summ.mu_tilde),
            "s_m": _fx(pwm.fmt, summ.s_m),
            "w_soft": _fx(pwm.fmt, th.w_soft),
            "w_hard": _fx(pwm.fmt, th.w_hard),
            "pvalue_soft": repr(normal_approx_tail(summ, th.w_soft)),
            "pvalue_hard": repr(normal_approx_tail(summ, th.w_hard)),
        }
        if args.exact:
            dist = exact_score_distribution(pwm, bg)
            rec["exact_pvalues"] = {"soft": repr(dist.tail(th.w_soft)),
                                    "hard": repr(dist.tail(th.w_hard))}
        out.append(rec)
    _emit(out)
    return 0


def cmd_match_classical(args):
    pwmset = _load_pwms(args)
    seq = _load_sequence(args, pwmset.alphabet)
    found = classical_match(pwmset, seq, args.w_th)
    table = score_table(pwmset, seq)
    _emit({
        "w_th": pwmset.fmt.raw_to_decimal(threshold_raw(pwmset, args.w_th)),
        "found": [[p.k, p.i] for p in found.sorted()],
        "scores": [pwmset.fmt.raw_to_decimal(int(table[p.k, p.i])) for p in found.sorted()],
    })
    return 0


def _match_config(args, algorithm: str) -> ExperimentConfig:
    values = {
        "algorithm": algorithm, "trials": args.trials, "seed": args.seed,
        "backend": args.backend, "kappa": args.kappa, "delta": args.delta,
        "background": args.background, "int_bits": args.int_bits, "frac_bits": args.frac_bits,
    }
    if algorithm == "naive":
        if args.pvalue is not None:
            values.update(threshold_mode="pvalue", pvalue=args.pvalue)
        elif args.x_hard is not None:
            values.update(threshold_mode="sigma", x_hard=args.x_hard)
        else:
            values.update(threshold_mode="explicit", w_th=args.w_th)
    else:
        if args.x_soft is not None or args.x_hard is not None:
            values.update(threshold_mode="sigma", x_soft=args.x_soft, x_hard=args.x_hard)
        else:
            values.update(threshold_mode="explicit", w_soft=args.w_soft, w_hard=args.w_hard)
    return ExperimentConfig.from_mapping(values)


def _cmd_match(args, algorithm: str):
    cfg = _match_config(args, algorithm)
    pwmset = _load_pwms(args)
    seq = _load_sequence(args, pwmset.alphabet)
    wl = build_workload(cfg, pwmset, seq)
    reports = run_trials(wl.instance, algorithm, cfg.backend, cfg.seed, cfg.trials)
    out = []
    for r in reports:
        d = r.as_dict()
        d["correct"] = judge(r, wl)
        out.append(d)
    _emit(out)
    return 0


def cmd_match_naive(args):
    return _cmd_match(args, "naive")


def cmd_match_qmci(args):
    return _cmd_match(args, "qmci")


def _overrides(args) -> dict:
    keys = ("algorithm", "trials", "seed", "backend", "kappa", "delta", "workers")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_run(args):
    text = Path(args.config).read_text()
    cfg = ExperimentConfig.from_mapping(parse_config_text(text), _overrides(args))
    record = run_experiment(cfg, args.out)
    _emit({k: v for k, v in record.as_dict().items() if k != "reports"})
    return 0 if record.passed else 1


def cmd_scaling(args):
    values = {
        "algorithm": args.algorithm, "trials": args.trials, "seed": args.seed,
        "delta": args.delta, "sweep_axis": args.axis, "sweep_grid": args.grid,
        "synth_n": args.n, "synth_m": args.m, "synth_K": args.K,
        "synth_n_hard": args.n_hard, "synth_n_soft": args.n_soft, "synth_seed": args.synth_seed,
        "workers": args.workers,
    }
    if args.algorithm == "naive":
        values["w_th"] = args.w_th
    else:
        values.update(w_soft=args.w_soft, w_hard=args.w_hard)
    cfg = ExperimentConfig.from_mapping(values)
    record = run_experiment(cfg, args.out)
    _emit({
        "scaling": record.scaling.as_dict() if record.scaling else None,
        "success_rate": record.success_rate,
        "error": record.error,
    })
    return 0 if record.error is None else 1


def validate_oracles(seed: int = 0, instances: int = 6) -> list[dict]:
    """Sparse-versus-analytic checks on small random instances."""
    rng = stream(seed)
    checks = []
    for t in range(instances):
        K = int(rng.integers(1, 3))
        m = int(rng.integers(2, 5))
        n = int(rng.integers(m + 1, m + 8))
        pwmset = mark_rescaled(random_pwmset(rng, K, m, lo=0, hi=100))
        seq = random_sequence(rng, n)
        scores = score_table(pwmset, seq)
        w_th = Fraction(int(np.median(scores)), pwmset.fmt.scale)
        oracles = OracleSet(seq, pwmset)
        bits_ok = all(
            naive_score_circuit(oracles, k, i).register_probability("w", int(scores[k, i])) == 1
            for k in range(K) for i in range(scores.shape[1])
        )
        sol = classical_match(pwmset, seq, w_th).sorted()
        excluded = MatchSet(sol[: len(sol) // 2])
        sparse = flagged_mass(build_flagged_state_naive(oracles, w_th, excluded))
        analytic = good_amplitude_naive(pwmset, seq, excluded, w_th).a
        checks.append({"instance": t, "check": "score register equals classical score",
                       "passed": bool(bits_ok)})
        checks.append({"instance": t, "check": "naive flagged mass", "sparse": str(sparse),
                       "analytic": str(analytic), "passed": sparse == analytic})
        th = SoftHardThresholds(0.3 * m, 0.6 * m)
        qp = make_qmci_params(th.gap / (2 * m), 0.1)
        qs = float(flagged_mass(build_flagged_state_qmci(oracles, th, qp, excluded)))
        qa = float(qmci_good_amplitude(pwmset, seq, excluded, th, qp).a)
        checks.append({"instance": t, "check": "QMCI flagged mass", "sparse": repr(qs),
                       "analytic": repr(qa), "passed": abs(qs - qa) <= 1e-9})
    for a in (0.0, 0.1, 0.5, 0.9, 1.0):
        d = qae_distribution(a, 64)
        ok = abs(d.total - 1) <= 1e-9 and d.mass_within(a, ae_error_bound(a, 64)) >= 8 / np.pi**2
        checks.append({"check": "amplitude estimation law", "a": a, "passed": bool(ok)})
        qd = qmci_estimate_distribution(a, make_qmci_params(0.1, 0.05))
        checks.append({"check": "median-of-J law", "mu": a,
                       "passed": bool(qd.mass_within(a, 0.1) >= 0.95)})
    return checks


def cmd_validate_oracles(args):
    checks = validate_oracles(args.seed, args.instances)
    passed = all(c["passed"] for c in checks)
    _emit({"passed": passed, "checks": checks})
    return 0 if passed else 1


def cmd_synth(args):
    rng = stream(args.seed)
    inst = generate_synthetic(rng, args.n, args.m, args.K, args.n_hard, args.n_soft,
                              soft_mutations=args.soft_mutations)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_fasta(inst.seq, out / "sequence.fa")
    paths = []
    for pwm in inst.pwmset:
        p = out / f"{pwm.name}.pwm"
        p.write_text(format_pwm(pwm))
        paths.append(str(p))
    truth = {"hard": [list(p) for p in inst.hard], "soft": [list(p) for p in inst.soft],
             "fasta": str(out / "sequence.fa"), "pwm": paths}
    (out / "truth.json").write_text(json.dumps(truth, indent=1))
    _emit(truth)
    return 0


def _add_io(p, sequence=True):
    p.add_argument("--pwm", nargs="+", required=True, help="PWM files (one PWM each)")
    if sequence:
        p.add_argument("--fasta", help="FASTA file")
        p.add_argument("--sequence", help="literal sequence text instead of --fasta")
    p.add_argument("--int-bits", type=int, default=16)
    p.add_argument("--frac-bits", type=int, default=32)


def _add_search(p):
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--kappa", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--backend", choices=("analytic", "sparse"), default="analytic")
    p.add_argument("--background", default="uniform")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpwm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="fixed-point segment scores")
    _add_io(p)
    p.add_argument("--position", type=int)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("thresholds", help="background moments, soft/hard thresholds, p-values")
    _add_io(p, sequence=False)
    p.add_argument("--background", default="uniform")
    p.add_argument("--x-soft", type=float, required=True)
    p.add_argument("--x-hard", type=float, required=True)
    p.add_argument("--exact", action="store_true", help="also give exact DP tail probabilities")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("match-classical", help="exhaustive matcher")
    _add_io(p)
    p.add_argument("--w-th", type=to_fraction, required=True)
    p.set_defaults(func=cmd_match_classical)

    p = sub.add_parser("match-naive", help="naive iteration method")
    _add_io(p)
    _add_search(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--w-th")
    g.add_argument("--pvalue", type=float)
    g.add_argument("--x-hard", type=float)
    p.set_defaults(func=cmd_match_naive, x_soft=None)

    p = sub.add_parser("match-qmci", help="QMCI-based method")
    _add_io(p)
    _add_search(p)
    p.add_argument("--w-soft")
    p.add_argument("--w-hard")
    p.add_argument("--x-soft", type=float)
    p.add_argument("--x-hard", type=float)
    p.set_defaults(func=cmd_match_qmci)

    p = sub.add_parser("scaling", help="query-count scaling sweep on synthetic instances")
    p.add_argument("--algorithm", choices=("naive", "qmci"), default="naive")
    p.add_argument("--axis", choices=("n", "m", "K", "n_sol", "gap"), required=True)
    p.add_argument("--grid", required=True, help="comma-separated values, at least three")
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--n-hard", type=int, default=4)
    p.add_argument("--n-soft", type=int, default=0)
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--w-th")
    p.add_argument("--w-soft")
    p.add_argument("--w-hard")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("validate-oracles", help="sparse versus analytic equivalence suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=6)
    p.set_defaults(func=cmd_validate_oracles)

    p = sub.add_parser("synth", help="write a synthetic instance with planted segments")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--n-hard", type=int, default=2)
    p.add_argument("--n-soft", type=int, default=0)
    p.add_argument("--soft-mutations", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run an experiment from a key = value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--algorithm", choices=("naive", "qmci"))
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=("analytic", "sparse"))
    p.add_argument("--kappa", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QpwmError, ValueError, OSError, KeyError) as exc:
        print(f"qpwm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
