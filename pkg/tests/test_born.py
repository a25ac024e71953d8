from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qxsim import born, qcore
from qxsim.born import BornModel, WeightedBranches
from qxsim.errors import OutOfRange, ZeroDelta
from qxsim.qcore import PureState
from qxsim.search import SearchInstance


def chi_square_ok(counts, probs, n, crit=20.0):
    expected = np.asarray(probs) * n
    mask = expected > 0
    return np.sum((np.asarray(counts)[mask] - expected[mask]) ** 2 / expected[mask]) < crit


def materialized_leakage(amps_kept, amps_supp, delta, k):
    """Build the flag, label and k-ancilla register explicitly and read every qubit.

    Controlled Hadamards put the ancillas into |+>^k on the spread branch,
    which is the suppressed branch for delta > 0 and the kept one for delta < 0.
    """
    plus_k = np.full(2**k, 2 ** (-k / 2))
    zero_k = qcore.basis_state(0, 2**k).amps
    spread_supp = delta > 0
    kept = np.kron(amps_kept, zero_k if spread_supp else plus_k)
    supp = np.kron(amps_supp, plus_k if spread_supp else zero_k)
    full = np.concatenate([kept, supp])  # flag qubit first
    probs = born.born_probabilities(full, BornModel(delta))
    return probs[len(kept):].sum()


# -- sampling --------------------------------------------------------------------

def test_born_probabilities_examples():
    amps = [math.sqrt(1 / 3), math.sqrt(2 / 3)]
    # (1/9, 4/9) / (5/9)
    assert np.allclose(born.born_probabilities(amps, BornModel(2.0)), [0.2, 0.8], atol=1e-12)
    for d in (-1.0, 0.3, 2.0):
        assert np.allclose(born.born_probabilities(qcore.KET_PLUS, BornModel(d)), [0.5, 0.5])


def test_exponent_must_be_positive():
    with pytest.raises(OutOfRange):
        BornModel(-2.0)


def test_zero_delta_matches_standard_measurement():
    rng = np.random.default_rng(20)
    s = qcore.haar_state(2, rng)
    probs = np.abs(s.amps) ** 2
    n = 10_000
    counts = np.bincount([born.born_sample(s, BornModel(0.0), rng) for _ in range(n)], minlength=4)
    assert chi_square_ok(counts, probs, n)
    measured = np.bincount([qcore.measure(s, qcore.computational_basis(4), rng)[0] for _ in range(n)], minlength=4)
    assert chi_square_ok(measured, probs, n)


def test_modified_rule_sample_frequencies():
    rng = np.random.default_rng(21)
    s = PureState([math.sqrt(1 / 3), math.sqrt(2 / 3)])
    n = 10_000
    counts = np.bincount([born.born_sample(s, BornModel(2.0), rng) for _ in range(n)], minlength=2)
    assert chi_square_ok(counts, [0.2, 0.8], n)


@settings(max_examples=100)
@given(st.lists(st.integers(1, 9), min_size=2, max_size=5), st.integers(1, 9), st.integers(1, 9))
def test_scale_invariance_exact_rational(weights, num, den):
    # with p = 4 the weight of amplitude sqrt(w) is w**2, so everything stays rational
    k2 = Fraction(num, den)
    base = [Fraction(w) ** 2 for w in weights]
    scaled = [(k2 * w) ** 2 for w in weights]
    assert [b / sum(base) for b in base] == [s / sum(scaled) for s in scaled]
    floats = born.born_probabilities(np.sqrt(weights), BornModel(2.0))
    assert np.allclose(floats, [float(b / sum(base)) for b in base], atol=1e-12)


def test_born_probabilities_ignore_global_scalar():
    rng = np.random.default_rng(22)
    for _ in range(50):
        a = qcore.haar_state(2, rng).amps
        c = rng.uniform(0.01, 10) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        m = BornModel(rng.uniform(-1, 3))
        assert np.allclose(born.born_probabilities(c * a, m), born.born_probabilities(a, m), atol=1e-12)


# -- postselection gadget --------------------------------------------------------

def test_suppression_factor_example():
    assert born.suppression_factor(0.5, 8) == pytest.approx(0.25)
    assert born.suppression_factor(-0.5, 8) == pytest.approx(0.25)


def test_equal_branches_leakage_example():
    amp = 2**-0.5
    res = born.simulate_postselect(WeightedBranches([(0, 0, amp, 1), (1, 1, amp, 1)], 2), BornModel(1.0), 20)
    assert res.leakage <= 2**-10 / (1 + 2**-10) + 1e-15
    assert res.leakage == pytest.approx(2**-10 / (1 + 2**-10), rel=1e-12)
    assert np.allclose(res.state.amps, [1, 0])


@pytest.mark.parametrize("delta", [0.5, 1.0, -0.5, -1.0, 2.0])
@pytest.mark.parametrize("k", [1, 3, 6])
def test_leakage_matches_materialized_ancillas(delta, k):
    rng = np.random.default_rng(23)
    v = qcore.haar_state(2, rng).amps
    kept_amps, supp_amps = v[:2], v[2:]
    terms = [(0, i, a, 1) for i, a in enumerate(kept_amps)] + [(1, i, a, 1) for i, a in enumerate(supp_amps)]
    res = born.simulate_postselect(WeightedBranches(terms, 2), BornModel(delta), k)
    assert res.leakage == pytest.approx(materialized_leakage(kept_amps, supp_amps, delta, k), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(-3.0, 3.0), st.integers(1, 400), st.floats(1e-3, 1e3))
def test_leakage_closed_form(delta, log_ratio, k, weight):
    terms = [(0, 0, 1.0, weight), (1, 1, math.exp(log_ratio), 1.0)]
    br = WeightedBranches(terms, 2)
    m = BornModel(delta)
    res = born.simulate_postselect(br, m, k)
    masses = br.masses(m)
    f = 2.0 ** (-k * delta / 2)
    closed = masses[1] * f / (masses[0] + masses[1] * f)
    assert res.leakage == pytest.approx(closed, abs=1e-12)


def test_postselect_needs_nonzero_delta():
    br = WeightedBranches([(0, 0, 1.0, 1), (1, 1, 1.0, 1)], 2)
    with pytest.raises(ZeroDelta):
        born.simulate_postselect(br, BornModel(0.0), 4)


def test_ancillas_for_leakage_is_minimal():
    m = BornModel(0.7)
    for ratio in (0.5, 3.0, 100.0):
        k = born.ancillas_for_leakage(m, ratio, 1e-3)
        assert born.postselect_leakage(1.0, ratio, m.delta, k) <= 1e-3
        assert k == 1 or born.postselect_leakage(1.0, ratio, m.delta, k - 1) > 1e-3


# -- teleportation ---------------------------------------------------------------

def test_teleport_fidelity_over_random_inputs():
    rng = np.random.default_rng(24)
    for _ in range(100):
        res = born.teleport_signal(BornModel(1.0), 8, rng=rng)
        assert res.fidelity >= 1 - 2**-8
        assert res.leakage <= 2**-8
        assert res.k == 20


def test_teleport_basis_state_and_negative_delta():
    zero = qcore.basis_state(0, 2)
    res = born.teleport_signal(BornModel(1.0), 8, psi=zero)
    # Z corrections leave |0> alone, so only the X branches cost fidelity
    assert res.fidelity == pytest.approx(1 - res.outcome_probabilities[1] - res.outcome_probabilities[3], abs=1e-12)
    assert res.fidelity >= 1 - 2**-8
    assert born.teleport_signal(BornModel(-1.0), 8, psi=zero).fidelity >= 1 - 2**-8


def test_teleport_outcomes_match_full_register_readout():
    rng = np.random.default_rng(25)
    psi = qcore.haar_state(1, rng)
    m = BornModel(1.0)
    res = born.teleport_signal(m, 6, psi=psi)
    state = qcore.tensor(psi, qcore.epr_pair())
    v = qcore.apply_operator(state, qcore.CNOT, [0, 1])
    v = qcore.apply_operator(v, qcore.H, [0], dims=state.dims)
    mass = (np.abs(v) ** m.p).reshape(4, 2).sum(axis=1)
    mass[1:] *= born.suppression_factor(m.delta, res.k)
    assert np.allclose(res.outcome_probabilities, mass / mass.sum(), atol=1e-12)


def test_teleport_needs_nonzero_delta():
    with pytest.raises(ZeroDelta):
        born.teleport_signal(BornModel(0.0), 8)


# -- search ----------------------------------------------------------------------

def test_born_search_examples():
    rng = np.random.default_rng(26)
    m = BornModel(0.5)
    for s in (0, 1):
        inst = SearchInstance.random(10, s, rng)
        out = born.born_search(inst, m, rng)
        assert out.solutions == s and out.queries == 1
    for d in (0.1, 1.0, -0.5):
        assert born.born_search(SearchInstance.random(10, 0, rng), BornModel(d), rng).solutions == 0


def test_born_search_success_rate_and_single_query():
    rng = np.random.default_rng(27)
    for d in (0.25, 0.5, -0.5):
        wrong = 0
        for t in range(100):
            inst = SearchInstance.random(10, t % 2, rng)
            out = born.born_search(inst, BornModel(d), rng)
            assert out.queries == 1 and inst.queries == 1
            wrong += out.solutions != t % 2
        assert wrong <= 1


def test_born_search_overhead_scales_inverse_delta():
    k_half = born.born_search_ancillas(10, BornModel(0.5))
    k_quarter = born.born_search_ancillas(10, BornModel(0.25))
    assert k_half <= math.ceil(2 * 10 / 0.5) + 2
    assert (k_half, k_quarter) == (42, 82)
    assert abs(k_quarter / k_half - 2) <= 0.2


def test_born_search_flag_probability_above_half():
    for n in (4, 10, 16):
        for d in (0.1, 0.5, 2.0):
            out = born.born_search(SearchInstance(n, [0]), BornModel(d), 0, samples=1)
            assert out.p_flag > 0.5


# -- lower bounds ----------------------------------------------------------------

def test_delta_bound_from_signaling():
    assert born.delta_bound_from_signaling(0.5, 10) == 0.05
    assert born.delta_bound_from_signaling(1e-300, 1) < 1e-299
    for eps, n in ((0.0, 1), (1.5, 1), (0.5, 0)):
        with pytest.raises(OutOfRange):
            born.delta_bound_from_signaling(eps, n)


@pytest.mark.parametrize("n_qubits,n_alice", [(2, 1), (4, 2)])
def test_signaling_consistency_with_delta_bound(n_qubits, n_alice):
    delta = 0.1
    eps = born.max_signaling_tvd(BornModel(delta), n_qubits, n_alice, 200, np.random.default_rng(28))
    assert eps > 0
    assert delta >= born.delta_bound_from_signaling(eps, n_qubits) * (1 - delta)


def test_standard_rule_does_not_signal():
    assert born.max_signaling_tvd(BornModel(0.0), 3, 1, 50, np.random.default_rng(29)) <= 1e-12


def test_delta_bound_from_search_examples():
    for N in (64, 2**10, 2**16):
        root = math.isqrt(N)
        for m in (1, 3, 7):
            value = born.delta_bound_from_search(Fraction(root, 24), N, m)
            assert isinstance(value, Fraction) and value * 12 * m == 1
    assert born.delta_bound_from_search(0, 64, 6) == Fraction(1, 36)
    assert born.delta_bound_from_search(Fraction(8, 12), 64, 2) == 0
    assert born.delta_bound_from_search(10, 64, 2) == 0
    assert born.delta_bound_from_search(0.0, 50, 1) == pytest.approx(1 / 6)


# -- rule uniqueness -------------------------------------------------------------

def test_power_law_passes():
    assert born.scale_invariance_check(lambda a: np.abs(a) ** 3, rng=30).passed


def test_sum_of_powers_fails_on_scale():
    res = born.scale_invariance_check(lambda a: np.abs(a) ** 2 + np.abs(a) ** 4, rng=31)
    assert not res.passed and res.witness.kind == "scale"
    assert res.witness.other == 0.5
    rule = lambda a: np.abs(a) ** 2 + np.abs(a) ** 4  # noqa: E731
    w = rule(res.witness.state)
    ws = rule(0.5 * res.witness.state)
    assert not np.allclose(w / w.sum(), ws / ws.sum())


def test_phase_dependent_rule_fails():
    rule = lambda a: np.abs(a) ** 2 * (1.5 + np.cos(np.angle(a)))  # noqa: E731
    res = born.scale_invariance_check(rule, rng=32)
    assert not res.passed and abs(abs(res.witness.other) - 1) < 1e-12
