from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qxsim import genpost, qcore
from qxsim.errors import DimTooLarge, OutOfRange
from qxsim.genpost import GenericPostselector
from qxsim.qcore import PureState


def fidelity(a, b):
    return abs(np.vdot(a, b)) ** 2


def matrix_gadget(g, state, pauli):
    """Gadget built from full matrices: controlled-SWAP permutation, projector, partial trace."""
    P, N = state.dim // 2, g.N
    dim = 2 * P * N * N
    cswap = np.zeros((dim, dim))
    for t, p, m, b in np.ndindex(2, P, N, N):
        src = np.ravel_multi_index((t, p, m, b), (2, P, N, N))
        dst = np.ravel_multi_index((t, p, b, m) if t else (t, p, m, b), (2, P, N, N))
        cswap[dst, src] = 1
    partner = np.kron(pauli, np.eye(N // 2)) @ g.psi.amps
    v = cswap @ np.kron(np.kron(state.amps, partner), g.psi.amps)
    proj = np.kron(np.eye(2 * P * N), g.psi.amps.conj()[None, :])
    kept = proj @ v
    kept /= np.linalg.norm(kept)
    return qcore.partial_trace(PureState(kept, (2, P, N)), [0, 1]).mat


# -- copy extraction -------------------------------------------------------------

def test_extract_copy_real_state_exact():
    psi = qcore.normalize([1, 2, 0, -1])
    out = genpost.extract_copy(GenericPostselector(psi))
    assert np.allclose(out.amps, psi.amps, atol=1e-12)


def test_extract_copy_gives_conjugate():
    psi = PureState([2**-0.5, 1j * 2**-0.5])
    out = genpost.extract_copy(GenericPostselector(psi))
    assert fidelity(out.amps, psi.amps.conj()) == pytest.approx(1, abs=1e-12)
    assert fidelity(out.amps, psi.amps) == pytest.approx(0, abs=1e-12)
    exact = genpost.extract_copy(GenericPostselector(psi), exact=True)
    assert fidelity(exact.amps, psi.amps) == pytest.approx(1, abs=1e-12)


def test_extract_copy_random_states():
    rng = np.random.default_rng(60)
    for i in range(100):
        g = GenericPostselector.haar(1 + i % 6, rng)
        first, second = genpost.extract_copy(g), genpost.extract_copy(g)
        assert fidelity(first.amps, g.psi.amps.conj()) == pytest.approx(1, abs=1e-10)
        assert fidelity(first.amps, second.amps) == pytest.approx(1, abs=1e-12)


def test_extract_copy_size_cap():
    with pytest.raises(DimTooLarge):
        genpost.extract_copy(GenericPostselector.haar(7, 0))


# -- gadget ----------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["x", "z"])
def test_gadget_zero_input_unchanged(mode):
    rng = np.random.default_rng(61)
    g = GenericPostselector.haar(3, rng)
    payload = qcore.haar_state(1, rng)
    state = qcore.tensor(qcore.basis_state(0, 2), payload)
    res = genpost.gadget_postselect_zero(g, state, mode)
    assert np.allclose(res.state.mat, state.density().mat, atol=1e-12)
    assert res.one_weight == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("mode", ["x", "z"])
def test_gadget_matches_matrix_construction(mode):
    rng = np.random.default_rng(62)
    for n in (1, 2, 3):
        g = GenericPostselector.haar(n, rng)
        state = qcore.haar_state(2, rng)
        res = genpost.gadget_postselect_zero(g, state, mode)
        ref = matrix_gadget(g, state, genpost.GADGET_PAULIS[mode])
        assert np.max(np.abs(res.state.mat - ref)) <= 1e-12


@pytest.mark.parametrize("mode", ["x", "z"])
def test_gadget_residual_equals_direct_overlap(mode):
    rng = np.random.default_rng(63)
    plus = PureState(qcore.KET_PLUS)
    for _ in range(100):
        g = GenericPostselector.haar(int(rng.integers(1, 7)), rng)
        res = genpost.gadget_postselect_zero(g, plus, mode)
        direct = abs(np.vdot(g.psi.amps, genpost.partner_state(g, mode)))
        assert abs(res.residual - direct) <= 1e-10
        assert abs(res.overlap) == pytest.approx(direct, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 0.95))
def test_gadget_relative_one_weight(seed, p1):
    rng = np.random.default_rng(seed)
    g = GenericPostselector.haar(2, rng)
    state = PureState([math.sqrt(1 - p1), math.sqrt(p1)])
    res = genpost.gadget_postselect_zero(g, state)
    ov2 = abs(g.psi.amps.conj() @ genpost.partner_state(g)) ** 2
    # the |1> branch keeps mass p1 * |ov|^2 against (1 - p1) for |0>
    expect = p1 * ov2 / ((1 - p1) + p1 * ov2)
    assert res.one_weight == pytest.approx(expect, abs=1e-12)


def test_gadget_rms_residual_at_six_qubits():
    rng = np.random.default_rng(64)
    plus = PureState(qcore.KET_PLUS)
    sq = np.array([genpost.gadget_postselect_zero(GenericPostselector.haar(6, rng), plus).residual ** 2
                   for _ in range(100)])
    stderr = sq.std(ddof=1) / math.sqrt(len(sq))
    assert abs(sq.mean() - 1 / 65) <= 3 * stderr
    assert math.sqrt(sq.mean()) == pytest.approx(1 / math.sqrt(65), rel=0.5)


def test_gadget_unknown_mode():
    with pytest.raises(ValueError):
        genpost.gadget_postselect_zero(GenericPostselector.haar(1, 0), PureState(qcore.KET_PLUS), "y")


# -- Haar overlap ----------------------------------------------------------------

def test_exact_mean_square_values():
    assert genpost.haar_mean_square_overlap(2) == Fraction(1, 3)
    assert genpost.haar_mean_square_overlap(16) == Fraction(1, 17)
    for N in (2, 4, 8, 1024):
        assert genpost.haar_mean_square_overlap(N) == Fraction(1, N + 1)


def test_exact_value_from_weingarten_sum():
    # E|<psi|P psi>|^2 = (Tr(P)^2 + Tr(P^2)) / (N(N+1)) for Hermitian P
    for N in (2, 8, 32):
        P = np.kron(qcore.X, np.eye(N // 2))
        value = (np.trace(P) ** 2 + np.trace(P @ P)) / (N * (N + 1))
        assert float(genpost.haar_mean_square_overlap(N)) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("op", ["x", "z"])
def test_monte_carlo_overlap(op):
    est = genpost.haar_rms_overlap(4, 10_000, np.random.default_rng(65), op)
    assert est.exact == pytest.approx(1 / 17)
    assert abs(est.z) <= 3


def test_rms_overlap_approaches_inverse_root_n():
    for n in (6, 10, 20):
        N = 2**n
        assert math.sqrt(float(genpost.haar_mean_square_overlap(N))) * math.sqrt(N) == pytest.approx(1, abs=1 / N)


def test_overlap_sampler_matches_state_construction():
    rng_a, rng_b = np.random.default_rng(66), np.random.default_rng(66)
    vals = genpost.haar_overlaps(3, 5, rng_a, "x")
    v = rng_b.normal(size=(5, 8)) + 1j * rng_b.normal(size=(5, 8))
    for row, val in zip(v, vals):
        g = GenericPostselector(qcore.normalize(row))
        assert abs(genpost.direct_overlap(g)) ** 2 == pytest.approx(val, abs=1e-12)


def test_overlap_preconditions():
    for n, samples in ((0, 100), (11, 100), (4, 10)):
        with pytest.raises(OutOfRange):
            genpost.haar_rms_overlap(n, samples, 0)
