"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured quantity and the
wall time against its budget, then asserts both.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from qpwm.amplitude_engines import (
    GoodSubspace,
    QaaParams,
    ae_error_bound,
    make_qmci_params,
    qae_distribution,
    qmci_estimate_distribution,
    qsearch,
)
from qpwm.errors import CapacityError
from qpwm.fixed_point import FixedPointFormat
from qpwm.harness import trial_rng
from qpwm.io import parse_pwm_text
from qpwm.matchers import ProblemInstance, complexity_report, run_naive_iteration, run_qmci_method
from qpwm.pwm_core import MatchSet, Sequence, classical_match, rescale, score_segment
from qpwm.pwm_core import score_table
from qpwm.qram_oracles import ExclusionTable, QueryLedger, build_qrams
from qpwm.score_oracles import (
    OracleSet,
    build_flagged_state_naive,
    flagged_mass,
    good_amplitude_naive,
    naive_score_circuit,
)
from qpwm.synth import binary_column_pwm, generate_synthetic, random_pwmset, random_sequence
from qpwm.thresholds import (
    BackgroundModel,
    SoftHardThresholds,
    moment_summary,
    normal_approx_tail,
    tail_discrepancy,
    tail_discrepancy_band,
)

from conftest import REFERENCE_PWM


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail} "
                  f"[{elapsed:.3g}s, budget {budget:g}s]")
        return ok
    return emit


def test_c01_example_score(verdict):
    pwm = parse_pwm_text(REFERENCE_PWM)
    seq = Sequence.from_string("TACATGCA")
    score_segment(pwm, seq, 0)
    t0 = time.perf_counter()
    w = score_segment(pwm, seq, 0)
    elapsed = time.perf_counter() - t0
    exact = sum(pwm.values[j][seq.data[j]] for j in range(8))
    # truncation leaves each of the m entries below its value by less than one ulp
    within = all(
        0 <= Fraction(393, 100) - score_segment(parse_pwm_text(REFERENCE_PWM, f), seq, 0)
        .to_fraction() < 8 * f.ulp
        for f in (FixedPointFormat(16, b) for b in range(7, 33)))
    shown = f"{float(w):.2f}"
    ok = exact == Fraction("3.93") and shown == "3.93" and within
    assert verdict(1, ok, f"W = {shown} (exact rational {exact}), m-ulp bound for 7..32 bits: "
                   f"{within}", elapsed, 1e-3)


def test_c02_rescaling_invariance(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(100):
        K, m = int(rng.integers(1, 5)), int(rng.integers(2, 17))
        n = int(rng.integers(m, 513))
        ps, seq = random_pwmset(rng, K, m), random_sequence(rng, n)
        kind = rng.integers(3)
        if kind == 0:
            # an attained score exactly, so the inclusive boundary is exercised
            k, i = int(rng.integers(K)), int(rng.integers(n - m + 1))
            w = sum(ps[k].values[j][seq.data[i + j]] for j in range(m))
        elif kind == 1:
            w = Fraction(int(rng.integers(-200 * m, 200 * m + 1)), 100)
        else:
            w = float(rng.uniform(-2 * m, 2 * m))
        scaled, w2 = rescale(ps, w)
        bad += classical_match(ps, seq, w) != classical_match(scaled, seq, w2)
    elapsed = time.perf_counter() - t0
    assert verdict(2, bad == 0, f"{100 - bad}/100 instances give identical match sets",
                   elapsed, 5)


def test_c03_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    mass_ok = bits_ok = True
    largest = 0
    for t in range(40):
        K, m = int(rng.integers(1, 5)), int(rng.integers(2, 9))
        n = int(rng.integers(m, 60 if t < 36 else 2048))
        ps, seq = random_pwmset(rng, K, m), random_sequence(rng, n)
        scores = score_table(ps, seq)
        w = Fraction(int(rng.choice(scores.ravel())), ps.fmt.scale)
        sol = classical_match(ps, seq, w).sorted()
        excluded = MatchSet(p for p in sol if rng.random() < 0.4)
        oracles = OracleSet(seq, ps)
        state = build_flagged_state_naive(oracles, w, excluded)
        largest = max(largest, len(state.weights))
        mass_ok &= flagged_mass(state) == good_amplitude_naive(ps, seq, excluded, w).a
        wi, ki, ii = state.index("w"), state.index("k"), state.index("i")
        bits_ok &= all(b[wi] == scores[b[ki], b[ii]] for b in state.weights)
        for _ in range(3):
            k, i = int(rng.integers(K)), int(rng.integers(scores.shape[1]))
            single = naive_score_circuit(oracles, k, i)
            bits_ok &= single.register_probability("w", int(scores[k, i])) == 1
    elapsed = time.perf_counter() - t0
    ok = mass_ok and bits_ok and largest <= 2**20
    assert verdict(3, ok, f"flagged mass exact: {mass_ok}, score register bit-exact: {bits_ok}, "
                   f"40 instances, largest state {largest}", elapsed, 30)


def test_c04_search_contract(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    trials = 1000
    worst = []
    ok = True
    for gamma in (0.01, 0.05):
        for delta in (0.2, 0.05):
            params = QaaParams(gamma, delta)
            for a in (gamma, 2 * gamma, 4 * gamma, 0.5, 1.0):
                src = GoodSubspace(a, lambda g: 1)
                wins = sum(qsearch(src, params, rng).success for _ in range(trials))
                floor = 1 - delta - 3 * math.sqrt(delta * (1 - delta) / trials)
                ok &= wins / trials >= floor
                worst.append(wins / trials - floor)
            zero = sum(qsearch(GoodSubspace(0.0), params, rng).success for _ in range(trials))
            ok &= zero == 0
    elapsed = time.perf_counter() - t0
    assert verdict(4, ok, f"20 grid points, smallest margin over 1-delta-3sigma "
                   f"{min(worst):+.4f}; a=0 never succeeds", elapsed, 60)


def test_c05_qmci_accuracy(verdict):
    t0 = time.perf_counter()
    margins = []
    for eps in (0.05, 0.1):
        for delta in (0.2, 0.05, 0.01):
            p = make_qmci_params(eps, delta)
            for mu in np.linspace(0, 1, 11):
                d = qmci_estimate_distribution(float(mu), p)
                margins.append(d.mass_within(float(mu), eps) - (1 - delta))
    ae = []
    for M in (8, 16, 32, 64, 128, 256, 512, 1024):
        for a in np.linspace(0, 1, 20):
            d = qae_distribution(float(a), M)
            ae.append(d.mass_within(float(a), ae_error_bound(float(a), M)))
    elapsed = time.perf_counter() - t0
    ok = min(margins) >= 0 and min(ae) >= 8 / math.pi**2
    assert verdict(5, ok, f"66 (eps, delta, mu) points, smallest margin {min(margins):+.3g}; "
                   f"smallest per-run bound mass {min(ae):.4f} >= {8 / math.pi**2:.4f}",
                   elapsed, 60)


def test_c06_naive_end_to_end(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    exact = total = outside = 0
    for inst_id in range(20):
        n = int(rng.choice([512, 1024, 2048, 4096]))
        m = int(rng.choice([8, 12, 16]))
        K = int(rng.integers(1, 5))
        si = generate_synthetic(rng, n, m, K, n_hard=inst_id % 9)
        w_th = m - Fraction(1, 2)
        sol = classical_match(si.pwmset, si.seq, w_th)
        assert len(sol) <= 8
        inst = ProblemInstance(si.pwmset, si.seq, w_th=w_th, delta=0.05)
        for t in range(10):
            r = run_naive_iteration(inst, trial_rng(inst_id, t))
            total += 1
            exact += r.found == sol
            outside += not r.found.issubset(sol)
    elapsed = time.perf_counter() - t0
    ok = exact / total >= 0.95 and outside == 0
    assert verdict(6, ok, f"exact output in {exact}/{total} trials, {outside} with a pair "
                   f"outside the solution set", elapsed, 600)


def _median_queries(n, m, trials, seed):
    si = generate_synthetic(np.random.default_rng(seed), n, m, K=1, n_hard=2)
    inst = ProblemInstance(si.pwmset, si.seq, w_th=m - Fraction(1, 2), delta=0.05)
    return [run_naive_iteration(inst, trial_rng(seed, t)) for t in range(trials)]


def test_c07_naive_scaling(verdict):
    t0 = time.perf_counter()
    by_n = {n: _median_queries(n, 8, 40, 70) for n in (2**10, 2**12, 2**14)}
    by_m = {m: _median_queries(4096, m, 40, 71) for m in (8, 16, 32)}
    fn = complexity_report(by_n, "n")
    fm = complexity_report(by_m, "m")
    elapsed = time.perf_counter() - t0
    ok = 0.4 <= fn.slope <= 0.6 and 0.85 <= fm.slope <= 1.15
    assert verdict(7, ok, f"slope vs n {fn.slope:.3f} (CI {fn.ci_low:.3f}..{fn.ci_high:.3f}), "
                   f"slope vs m {fm.slope:.3f} (CI {fm.ci_low:.3f}..{fm.ci_high:.3f})",
                   elapsed, 900)


def test_c08_qmci_end_to_end(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    th = SoftHardThresholds(5.5, 7.5)
    good = total = below = 0
    for inst_id in range(20):
        n = int(rng.choice([512, 1024, 2048]))
        K = int(rng.integers(1, 3))
        si = generate_synthetic(rng, n, 8, K, n_hard=1 + inst_id % 2, n_soft=inst_id % 7)
        hard = classical_match(si.pwmset, si.seq, th.w_hard)
        soft = classical_match(si.pwmset, si.seq, th.w_soft)
        inst = ProblemInstance(si.pwmset, si.seq, thresholds=th, delta=0.1)
        for t in range(10):
            r = run_qmci_method(inst, trial_rng(inst_id, t))
            total += 1
            good += hard.issubset(r.found) and r.found.issubset(soft)
            below += not r.found.issubset(soft)
    elapsed = time.perf_counter() - t0
    ok = good / total >= 0.9 and below == 0
    assert verdict(8, ok, f"hard set within output within soft set in {good}/{total} trials; "
                   f"{below} trials returned a pair below w_soft", elapsed, 900)


def test_c09_gap_dependence(verdict):
    t0 = time.perf_counter()
    si = generate_synthetic(np.random.default_rng(9), 1024, 8, K=2, n_hard=2, n_soft=2)
    medians = []
    for gap in (0.5, 1.0, 2.0):
        th = SoftHardThresholds(6.5 - gap / 2, 6.5 + gap / 2)
        inst = ProblemInstance(si.pwmset, si.seq, thresholds=th, delta=0.1)
        reps = [run_qmci_method(inst, trial_rng(9, t)) for t in range(40)]
        medians.append(float(np.median([r.ledger["queries_seq"] for r in reps])))
    ratios = [b / a for a, b in zip(medians, medians[1:])]
    elapsed = time.perf_counter() - t0
    ok = all(0.375 <= r <= 0.625 for r in ratios)
    assert verdict(9, ok, "median seq-query ratio per gap doubling "
                   + ", ".join(f"{r:.3f}" for r in ratios) + " (target 0.5 +/- 25%)",
                   elapsed, 600)


def test_c10_normal_tail_numerics(verdict):
    t0 = time.perf_counter()
    bg = BackgroundModel.uniform(2)
    summary = moment_summary(binary_column_pwm(8), bg)
    p3 = normal_approx_tail(summary, summary.mu_tilde + 3 * summary.s_m)
    p4 = normal_approx_tail(summary, summary.mu_tilde + 4 * summary.s_m)
    values_ok = f"{p3:.2e}" == "1.35e-03" and f"{p4:.2e}" == "3.17e-05"
    d = {m: tail_discrepancy(binary_column_pwm(m), bg, [2.0, 3.0]) for m in (8, 16, 32)}
    mono = [bool(d[8][j] > d[16][j] > d[32][j]) for j in range(2)]
    band = [tail_discrepancy_band(binary_column_pwm(m), bg, 2, 3) for m in (8, 16, 32)]
    elapsed = time.perf_counter() - t0
    ok = values_ok and all(mono)
    table = "; ".join(f"x={x:g}: " + ", ".join(f"{d[m][j]:.4f}" for m in (8, 16, 32))
                      for j, x in enumerate((2, 3)))
    assert verdict(10, ok, f"tails {p3:.3g} and {p4:.3g}; discrepancy over m=8,16,32 {table}; "
                   f"monotone at x=2,3: {mono}; sup over x in [2,3]: "
                   + ", ".join(f"{b:.4f}" for b in band), elapsed, 60)


def test_c11_cost_model(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    init_ok = True
    for _ in range(10):
        K, m = int(rng.integers(1, 6)), int(rng.integers(2, 12))
        n, kappa = int(rng.integers(m, 300)), int(rng.integers(1, 7))
        *_, ledger = build_qrams(random_sequence(rng, n), random_pwmset(rng, K, m), kappa)
        init_ok &= ledger.init_units == n + m * 4 * K + kappa * n
    cap_ok = True
    for kappa in (1, 2, 4):
        table = ExclusionTable(6, kappa, QueryLedger())
        for k in range(kappa):
            table.insert((k, 3))
        try:
            table.insert((kappa, 3))
            cap_ok = False
        except CapacityError:
            pass
    elapsed = time.perf_counter() - t0
    assert verdict(11, init_ok and cap_ok, f"init cost formula on 10 shapes: {init_ok}; "
                   f"capacity error exactly at kappa+1: {cap_ok}", elapsed, 1)
