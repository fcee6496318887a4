from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpwm.amplitude_engines import make_qmci_params
from qpwm.errors import PreconditionError, RangeError, ResourceError
from qpwm.pwm_core import DNA, MatchSet, Pwm, PwmSet, Sequence, classical_match, mark_rescaled
from qpwm.pwm_core import score_segment, score_table
from qpwm.score_oracles import (
    OracleSet,
    QmciAmplitudeTable,
    build_flagged_state_naive,
    build_flagged_state_qmci,
    flagged_mass,
    good_amplitude_naive,
    naive_score_circuit,
    qmci_gamma_squared,
    qmci_good_amplitude,
    sc_one,
)
from qpwm.sparse import SparseState
from qpwm.synth import generate_synthetic, random_pwmset, random_sequence
from qpwm.thresholds import SoftHardThresholds


def w_register(state):
    (basis,) = state.weights
    return basis[state.index("w")]


def test_reference_pwm_circuit(ref_set):
    seq = Sequence.from_string("TACATGCA")
    o = OracleSet(seq, ref_set)
    st_ = naive_score_circuit(o, 0, 0)
    assert w_register(st_) == score_segment(ref_set[0], seq, 0).raw
    assert round(w_register(st_) / 2**32, 2) == 3.93
    assert (o.ledger.queries_seq, o.ledger.queries_pwm) == (8, 8)


def test_circuit_final_workspace(ref_set):
    # the last iteration keeps its symbol and entry registers loaded
    seq = Sequence.from_string("TACATGCA")
    st_ = naive_score_circuit(OracleSet(seq, ref_set), 0, 0)
    (b,) = st_.weights
    v = dict(zip(st_.registers, b))
    assert (v["k"], v["i"], v["j"], v["l"]) == (0, 0, 7, 7)
    assert v["s"] == DNA.label("A")
    assert v["mval"] == ref_set[0].raw[7, DNA.label("A")]


def test_all_zero_pwm_circuit():
    ps = PwmSet([Pwm.from_rows(DNA, [[0] * 4] * 3)])
    assert w_register(naive_score_circuit(OracleSet(Sequence.from_string("ACGTT"), ps), 0, 1)) == 0


def test_toy_circuit_equals_classical(toy_ac):
    ps, seq = toy_ac
    o = OracleSet(seq, ps)
    for i in range(3):
        assert w_register(naive_score_circuit(o, 0, i)) == score_segment(ps[0], seq, i).raw


def test_circuit_range_errors(toy_ac):
    o = OracleSet(*reversed(toy_ac))
    with pytest.raises(RangeError):
        naive_score_circuit(o, 0, 3)
    with pytest.raises(RangeError):
        naive_score_circuit(o, 1, 0)


def test_sc_one(ref_set):
    o = OracleSet(Sequence.from_string("TACATGCA"), ref_set)
    # [PAPER] row T, column 1
    v = sc_one(o, 0, 0, 0)
    assert v == ref_set[0].entry(0, DNA.label("T"))
    assert round(float(v), 2) == 0.89
    assert (o.ledger.queries_seq, o.ledger.queries_pwm) == (1, 1)
    with pytest.raises(RangeError):
        sc_one(o, 0, 1, 7)


def test_sc_one_padded_row_is_zero():
    from qpwm.pwm_core import pad_to_uniform_length

    a = Pwm.from_rows(DNA, [[1, 2, 3, 4]] * 2)
    b = Pwm.from_rows(DNA, [[1, 2, 3, 4]] * 3)
    ps = pad_to_uniform_length([a, b])
    o = OracleSet(Sequence.from_string("ACGTAC"), ps)
    assert sc_one(o, 0, 0, 2).raw == 0


def test_sc_one_random_lookups(rng):
    ps, seq = random_pwmset(rng, 3, 6), random_sequence(rng, 30)
    o = OracleSet(seq, ps)
    for _ in range(50):
        k, i, j = int(rng.integers(3)), int(rng.integers(25)), int(rng.integers(6))
        assert sc_one(o, k, i, j).raw == ps.raw[k, j, seq.data[i + j]]


def test_toy_flagged_mass(toy_ac):
    ps, seq = toy_ac
    o = OracleSet(seq, ps)
    sol = classical_match(ps, seq, 2)
    assert sol == {(0, 0), (0, 2)}
    # [DERIVED] counting over three superposed positions
    assert flagged_mass(build_flagged_state_naive(o, 2, MatchSet())) == Fraction(2, 3)
    assert flagged_mass(build_flagged_state_naive(o, 2, sol)) == 0
    assert flagged_mass(build_flagged_state_naive(o, 2, [(0, 2)])) == Fraction(1, 3)
    o.table.insert((0, 0))
    assert flagged_mass(build_flagged_state_naive(o, 2)) == Fraction(1, 3)


def test_toy_good_amplitude(toy_ac):
    ps, seq = toy_ac
    assert good_amplitude_naive(ps, seq, MatchSet(), 2).a == Fraction(2, 3)
    assert good_amplitude_naive(ps, seq, [(0, 0), (0, 2)], 2).a == 0
    g = good_amplitude_naive(ps, seq, [(0, 2)], 2)
    assert (g.a, g.n_remaining, g.normaliser) == (Fraction(1, 3), 1, 3)


def test_flagged_state_is_normalised(toy_ac):
    state = build_flagged_state_naive(OracleSet(toy_ac[1], toy_ac[0]), 2)
    state.check_normalised()
    assert state.total() == 1


def test_flagged_state_charges_one_application(toy_ac):
    o = OracleSet(toy_ac[1], toy_ac[0])
    build_flagged_state_naive(o, 2)
    assert (o.ledger.queries_seq, o.ledger.queries_pwm, o.ledger.queries_p) == (2, 2, 1)


def test_state_cap(rng):
    ps, seq = random_pwmset(rng, 2, 3), random_sequence(rng, 40)
    with pytest.raises(ResourceError):
        build_flagged_state_naive(OracleSet(seq, ps), 0, cap=50)


def test_non_permutation_detected():
    s = SparseState(("a", "b"))
    s.prepare("a", {0: Fraction(1, 2), 1: Fraction(1, 2)})
    with pytest.raises(PreconditionError):
        s.apply_on(("a",), lambda a: (0,))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sparse_and_analytic_naive_agree(seed):
    rng = np.random.default_rng(seed)
    K, m = int(rng.integers(1, 4)), int(rng.integers(2, 5))
    ps = random_pwmset(rng, K, m, lo=-50, hi=50)
    seq = random_sequence(rng, int(rng.integers(m, m + 12)))
    scores = score_table(ps, seq)
    w = Fraction(int(rng.choice(scores.ravel())), ps.fmt.scale)
    sol = classical_match(ps, seq, w).sorted()
    excluded = MatchSet(p for p in sol if rng.random() < 0.5)
    o = OracleSet(seq, ps)
    state = build_flagged_state_naive(o, w, excluded)
    assert flagged_mass(state) == good_amplitude_naive(ps, seq, excluded, w).a
    # every superposed branch carries its classical score bit for bit
    wi, ki, ii = state.index("w"), state.index("k"), state.index("i")
    assert all(b[wi] == scores[b[ki], b[ii]] for b in state.weights)


def test_gamma_squared_point_masses():
    th = SoftHardThresholds(1.0, 3.0)
    p = make_qmci_params(th.gap / 8, 0.01)
    g = qmci_gamma_squared(np.array([1.0, 0.0]), th, 4, p)
    assert g[0] == pytest.approx(1.0) and g[1] == pytest.approx(0.0, abs=1e-15)


def _qmci_instance(seed):
    rng = np.random.default_rng(seed)
    si = generate_synthetic(rng, 256, 8, K=2, n_hard=2, n_soft=2)
    th = SoftHardThresholds(5.5, 7.5)
    return si, th


def test_hard_and_low_pairs_separate():
    si, th = _qmci_instance(3)
    m, K, n = 8, 2, si.seq.n
    d1 = 0.1 / (4 * K * K * n * n)
    p = make_qmci_params(th.gap / (2 * m), d1)
    scores = score_table(si.pwmset, si.seq) / 2**32
    g = qmci_gamma_squared(scores / m, th, m, p)
    hard, low = scores >= th.w_hard, scores < th.w_soft
    assert hard.any() and low.any()
    assert g[hard].min() >= 1 - d1
    assert g[low].max() < d1


def test_qmci_amplitude_lower_bound():
    si, th = _qmci_instance(4)
    p = make_qmci_params(th.gap / 16, 1e-6)
    amp = qmci_good_amplitude(si.pwmset, si.seq, [], th, p)
    assert amp.a >= 1 / (2 * amp.normaliser)


def test_sparse_and_analytic_qmci_agree(rng):
    ps = mark_rescaled(random_pwmset(rng, 2, 3, lo=0, hi=100))
    seq = random_sequence(rng, 9)
    th = SoftHardThresholds(1.0, 2.0)
    p = make_qmci_params(th.gap / 6, 0.05)
    excluded = MatchSet([(0, 1), (1, 4)])
    o = OracleSet(seq, ps)
    sparse = float(flagged_mass(build_flagged_state_qmci(o, th, p, excluded)))
    assert sparse == pytest.approx(qmci_good_amplitude(ps, seq, excluded, th, p).a, abs=1e-12)


def test_amplitude_table_exclusion_and_sampling(rng):
    si, th = _qmci_instance(5)
    p = make_qmci_params(th.gap / 16, 1e-4)
    tab = QmciAmplitudeTable.build(si.pwmset, si.seq, th, p)
    a0 = tab.amplitude().a
    pair = tab.sample(rng)
    assert tab.gamma2[pair] > 0
    tab.exclude(pair)
    assert tab.amplitude().a == pytest.approx(a0 - tab.gamma2[pair] / tab.normaliser)


def test_qmci_needs_rescaled_set(rng):
    ps, seq = random_pwmset(rng, 1, 3), random_sequence(rng, 10)
    with pytest.raises(PreconditionError):
        qmci_good_amplitude(ps, seq, [], SoftHardThresholds(1, 2), make_qmci_params(0.1, 0.1))
