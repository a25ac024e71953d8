from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qxsim import nonlinear, qcore
from qxsim.errors import DimTooLarge, NoAmplification, NotAQubit, NotNormalized
from qxsim.nonlinear import NonlinearMap
from qxsim.qcore import DensityMatrix, PureState
from qxsim.search import SearchInstance


def random_density(dim, rng, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def reduced_by_einsum(rho, dims, keep):
    """Reduced state via an einsum over the traced index pairs."""
    n = len(dims)
    t = rho.reshape(dims + dims)
    letters = "abcdefghijkl"
    row = list(letters[:n])
    col = [row[i] if i not in keep else letters[n + i] for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    return r.reshape(d, d)


def epsilon_steps(n, threshold=0.2):
    """Iterations of eps -> 2 eps - 2 eps^2 from 2^-n until eps reaches the threshold.

    The trace distance between rho_eps and |+><+| is eps itself.
    """
    eps, k = 2.0**-n, 0
    while eps < threshold:
        eps, k = 2 * eps - 2 * eps * eps, k + 1
    return k


# -- clone -----------------------------------------------------------------------

def test_clone_pure_product():
    rng = np.random.default_rng(40)
    psi = qcore.haar_state(1, rng)
    out = nonlinear.clone(psi, 0)
    rho = psi.density().mat
    assert np.allclose(out.mat, np.kron(rho, rho), atol=1e-12)
    assert out.dims == (2, 2)


def test_clone_epr_half():
    out = nonlinear.clone(qcore.epr_pair(), 1)
    assert np.allclose(out.mat, np.kron(qcore.epr_pair().density().mat, np.eye(2) / 2), atol=1e-12)


def test_clone_positions_share_reduced_state():
    rng = np.random.default_rng(41)
    for _ in range(50):
        rho = DensityMatrix(random_density(4, rng), (2, 2))
        out = nonlinear.clone(rho, 1)
        orig = reduced_by_einsum(out.mat, [2, 2, 2], [1])
        copy = reduced_by_einsum(out.mat, [2, 2, 2], [2])
        assert np.max(np.abs(orig - copy)) <= 1e-12
        assert abs(np.trace(out.mat) - 1) <= 1e-12
        # the untouched qubit keeps its reduced state
        assert np.max(np.abs(reduced_by_einsum(out.mat, [2, 2, 2], [0]) - reduced_by_einsum(rho.mat, [2, 2], [0]))) <= 1e-12


def test_clone_target_must_be_qubit():
    with pytest.raises(NotAQubit):
        nonlinear.clone(DensityMatrix(np.eye(3) / 3), 0)
    with pytest.raises(NotAQubit):
        nonlinear.clone(qcore.epr_pair(), 2)


# -- clone map -------------------------------------------------------------------

def test_clone_map_matches_gadget_on_random_states():
    rng = np.random.default_rng(42)
    worst = 0.0
    for i in range(1000):
        rho = random_density(2, rng, rank=1 + i % 2)
        diff = nonlinear.cnot_clone_map(rho) - nonlinear.cnot_clone_gadget(DensityMatrix(rho))
        worst = max(worst, float(np.max(np.abs(diff))))
        assert abs(np.trace(nonlinear.cnot_clone_map(rho)) - 1) <= 1e-12
    assert worst <= 1e-12


def test_fixed_points():
    for r in (0.0, 0.3, 1.0):
        assert nonlinear.is_fixed_point(nonlinear.rho_r(r))
    assert nonlinear.is_fixed_point(nonlinear.RHO_PLUS)
    rng = np.random.default_rng(43)
    assert not any(nonlinear.is_fixed_point(random_density(2, rng)) for _ in range(1000))
    assert not nonlinear.is_fixed_point(np.full((2, 2), 0.5) * np.array([[1, -1], [-1, 1]]))


def test_epsilon_recursion_example():
    out = nonlinear.cnot_clone_map(nonlinear.rho_eps(0.1))
    assert out[0, 1].real == pytest.approx(0.32, abs=1e-15)
    assert np.allclose(out, nonlinear.rho_eps(0.18), atol=1e-15)


@given(st.floats(0.0, 0.5))
def test_epsilon_recursion_exact(eps):
    out = nonlinear.cnot_clone_map(nonlinear.rho_eps(eps))
    assert np.allclose(out, nonlinear.rho_eps(2 * eps - 2 * eps * eps), atol=1e-15)


def test_minus_probability():
    assert nonlinear.minus_probability(nonlinear.RHO_PLUS) == 0.0
    assert nonlinear.minus_probability(nonlinear.rho_eps(0.3)) == pytest.approx(0.3)


# -- clone search ----------------------------------------------------------------

@pytest.mark.parametrize("n", [4, 10, 16, 20, 24])
def test_clone_search_iteration_count(n):
    k = nonlinear.clone_search_iterations(n)
    assert k == epsilon_steps(n)
    assert k <= n + 6


def test_clone_search_examples():
    rng = np.random.default_rng(44)
    out = nonlinear.clone_search(SearchInstance.random(10, 1, rng), rng)
    assert out.solutions == 1 and out.iterations <= 16 and out.queries == 1
    out = nonlinear.clone_search(SearchInstance.random(20, 1, rng), rng)
    assert out.solutions == 1 and out.iterations <= 26
    for n in (3, 10, 20):
        out = nonlinear.clone_search(SearchInstance.random(n, 0, rng), rng)
        assert out.solutions == 0 and out.distance == 0.0


def test_clone_search_success_rate():
    rng = np.random.default_rng(45)
    for n in (8, 12):
        wrong = 0
        for t in range(200):
            inst = SearchInstance.random(n, t % 2, rng)
            out = nonlinear.clone_search(inst, rng)
            assert inst.queries == 1
            wrong += out.solutions != t % 2
        assert wrong <= 2


def test_clone_search_cap():
    with pytest.raises(DimTooLarge):
        nonlinear.clone_search(SearchInstance(25, []))


# -- clone signaling -------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3, 5, 8])
def test_clone_signal_channel(k):
    ch = nonlinear.clone_signal(k)
    assert ch.eps0 == pytest.approx(2.0 ** (1 - k), abs=1e-15)
    assert ch.eps1 == pytest.approx(0.0, abs=1e-15)


def test_clone_signal_frequencies():
    rng = np.random.default_rng(46)
    trials = 10_000
    for k in (3, 5, 8):
        idle, used = nonlinear.clone_signal_frequencies(k, trials, rng)
        p = 2.0 ** (1 - k)
        assert abs(idle - p) <= 3 * math.sqrt(p * (1 - p) / trials)
        assert used == 1.0


# -- magnification ---------------------------------------------------------------

def diag_gain(kappa, theta):
    """Stretch of real states cos t |0> + sin t |1> under v -> diag(1, kappa) v / norm."""
    return kappa / (math.cos(theta) ** 2 + kappa**2 * math.sin(theta) ** 2)


def test_unitary_map_has_unit_magnification():
    U = qcore.haar_unitary(2, np.random.default_rng(47))
    mag = nonlinear.estimate_magnification(NonlinearMap.from_matrix(U), samples=200, rng=1)
    assert mag.r == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kappa", [1.1, 1.5, 2.0])
def test_magnification_of_diagonal_maps(kappa):
    grid = np.linspace(0, math.pi, 20001)
    oracle = max(diag_gain(kappa, t) for t in grid)
    mag = nonlinear.estimate_magnification(NonlinearMap.from_matrix(np.diag([1.0, kappa])), rng=2)
    assert abs(mag.r / oracle - 1) <= 0.05
    assert mag.r <= oracle * (1 + 1e-4)  # a lower bound up to finite-difference error
    a, b = mag.endpoints
    S = NonlinearMap.from_matrix(np.diag([1.0, kappa]))
    assert qcore.fs_angle(S(a), S(b)) / qcore.fs_angle(a, b) == pytest.approx(mag.r, rel=1e-9)


def test_nonlinear_map_rejects_unnormalized_output():
    S = NonlinearMap(lambda v: 2 * v, 2)
    with pytest.raises(NotNormalized):
        S(qcore.KET0)


# -- amplification ---------------------------------------------------------------

def close_pair(angle, dim=2):
    return PureState(np.eye(dim)[0]), PureState(math.cos(angle) * np.eye(dim)[0] + math.sin(angle) * np.eye(dim)[1])


def test_amplify_already_separated():
    a, b = close_pair(1.0)
    res = nonlinear.nonlinear_amplify(NonlinearMap.from_matrix(np.diag([1.0, 2.0])), a, b, 0.3)
    assert res.iterations == 0


def test_amplify_diag_1_2():
    a, b = close_pair(2.0**-20)
    S = NonlinearMap.from_matrix(np.diag([1.0, 2.0]))
    mag = nonlinear.estimate_magnification(S, rng=3)
    res = nonlinear.nonlinear_amplify(S, a, b, 0.3, magnification=mag)
    assert res.iterations <= 30
    assert res.iterations <= math.ceil(math.log(0.3 / res.distances[0], mag.r)) + 10
    assert res.distances[-1] >= 0.3
    # rotation keeps the overlap, so every step moves the pair apart
    assert all(y > x for x, y in zip(res.distances, res.distances[1:]))


def test_amplify_iterations_halve_when_gain_squares():
    a, b = close_pair(2.0**-20)
    its = [nonlinear.nonlinear_amplify(NonlinearMap.from_matrix(np.diag([1.0, k])), a, b, 0.3, rng=4).iterations
           for k in (1.5, 2.25)]
    assert abs(its[0] / 2 - its[1]) <= 2


def test_amplify_needs_magnification():
    a, b = close_pair(1e-3)
    with pytest.raises(NoAmplification):
        nonlinear.nonlinear_amplify(NonlinearMap.from_matrix(np.eye(2)), a, b, 0.3, rng=5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_amplify_random_planes_in_higher_dimension(seed):
    rng = np.random.default_rng(seed)
    a = qcore.haar_state(2, rng)
    b = qcore.normalize(a.amps + 1e-4 * qcore.haar_state(2, rng).amps)
    S = NonlinearMap.from_matrix(np.diag([1.0, 1.0, 1.5, 2.0]))
    res = nonlinear.nonlinear_amplify(S, a, b, 0.3, rng=rng)
    assert res.distances[-1] >= 0.3 and res.iterations <= 40


# -- ambiguity -------------------------------------------------------------------

def test_schmidt_ambiguity():
    demo = nonlinear.schmidt_ambiguity_demo()
    assert np.allclose(demo.computational.amps, np.kron(qcore.KET0, qcore.KET_PLUS), atol=1e-12)
    assert np.allclose(demo.hadamard.amps, np.kron(qcore.KET0, qcore.KET0), atol=1e-12)
    assert abs(demo.distance - 2**-0.5) <= 1e-12


def test_ambiguity_vanishes_for_product_state():
    demo = nonlinear.schmidt_ambiguity_demo(product=True)
    assert np.allclose(demo.computational.amps, demo.hadamard.amps, atol=1e-12)
    assert demo.distance <= 1e-12
