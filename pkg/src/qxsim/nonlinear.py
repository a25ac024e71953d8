"""Single-qubit cloning, generic nonlinear pure-state maps and the decomposition ambiguity.

The cloner acts on density matrices as ``rho_AB -> rho_AB (x) rho_B``; the
copy is appended as the last qubit and the original position keeps any
entanglement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import qcore
from .channels import BinaryChannel
from .errors import DimTooLarge, IterationCap, NoAmplification, NotAQubit, NotNormalized
from .fsp import aligning_unitary
from .qcore import DensityMatrix, PureState
from .search import SearchInstance

MAX_CLONE_SEARCH_N = 24
CLONE_THRESHOLD = 0.2


# -- cloning ---------------------------------------------------------------

def clone(rho: DensityMatrix | PureState, target: int) -> DensityMatrix:
    """Append a copy of subsystem ``target``'s reduced state as a new last qubit."""
    rho = qcore.to_density(rho)
    if not 0 <= target < len(rho.dims) or rho.dims[target] != 2:
        raise NotAQubit(f"subsystem {target} of {rho.dims} is not a qubit")
    if rho.dim * 2 > qcore.MAX_MIXED_DIM:
        raise DimTooLarge(f"cloned dimension {rho.dim * 2} exceeds {qcore.MAX_MIXED_DIM}")
    reduced = qcore.partial_trace(rho, [target]).mat
    return DensityMatrix(np.kron(rho.mat, reduced), rho.dims + (2,), check=False)


def _as_qubit_matrix(rho) -> np.ndarray:
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if mat.shape != (2, 2):
        raise NotAQubit(f"expected a 2x2 matrix, got shape {mat.shape}")
    return mat


def cnot_clone_map(rho) -> np.ndarray:
    """Closed form of clone, CNOT (original controls the copy), discard copy.

    ``[[r00^2 + r00 r11, r01^2 + r01 r10], [r10^2 + r10 r01, r11^2 + r11 r00]]``.
    Accepts any 2x2 matrix so fixed points can be studied off the physical set.
    """
    r = _as_qubit_matrix(rho)
    r00, r01, r10, r11 = r[0, 0], r[0, 1], r[1, 0], r[1, 1]
    return np.array([[r00 * r00 + r00 * r11, r01 * r01 + r01 * r10],
                     [r10 * r10 + r10 * r01, r11 * r11 + r11 * r00]])


def cnot_clone_gadget(rho: DensityMatrix) -> np.ndarray:
    """The same map built from :func:`clone`, a CNOT gate and a partial trace."""
    rho = DensityMatrix(_as_qubit_matrix(rho), check=False) if not isinstance(rho, DensityMatrix) else rho
    if rho.dims != (2,):
        raise NotAQubit("expected a single qubit")
    pair = clone(rho, 0)
    mixed = qcore.CNOT @ pair.mat @ qcore.CNOT.conj().T
    return qcore.partial_trace(DensityMatrix(mixed, (2, 2), check=False), [0]).mat


def rho_r(r: float) -> np.ndarray:
    return np.diag([r, 1.0 - r]).astype(complex)


RHO_PLUS = np.full((2, 2), 0.5, dtype=complex)


def rho_eps(eps: float) -> np.ndarray:
    """``(1 - eps)|+><+| + eps|-><-|``, off-diagonals ``1/2 - eps``."""
    return np.array([[0.5, 0.5 - eps], [0.5 - eps, 0.5]], dtype=complex)


def is_fixed_point(rho, tol: float = 1e-9) -> bool:
    r = _as_qubit_matrix(rho)
    return bool(np.max(np.abs(cnot_clone_map(r) - r)) <= tol)


def minus_probability(rho: np.ndarray) -> float:
    """``<-|rho|->``; exactly zero for ``|+><+|`` in floating point."""
    return float(np.real(rho[0, 0] + rho[1, 1] - rho[0, 1] - rho[1, 0]) / 2.0)


@dataclass
class CloneSearchOutcome:
    solutions: int
    iterations: int
    queries: int
    distance: float


def clone_search_iterations(n: int, threshold: float = CLONE_THRESHOLD) -> int:
    """Map applications taking ``rho_eps`` at ``eps = 2**-n`` to distance ``threshold`` from ``|+><+|``."""
    rho = rho_eps(2.0**-n)
    k = 0
    while qcore.trace_distance(DensityMatrix(rho, check=False), DensityMatrix(RHO_PLUS, check=False)) < threshold:
        rho = cnot_clone_map(rho)
        k += 1
        if k > 4 * n + 64:
            raise IterationCap("reference trajectory did not leave the fixed point")
    return k


def clone_search(inst: SearchInstance, rng=None, samples: int = 100,
                 threshold: float = CLONE_THRESHOLD) -> CloneSearchOutcome:
    """Decide zero vs one marked item with one query and iterated cloning.

    The register starts maximally mixed and the target qubit in ``|0>``;
    after the bit-flip query and a Hadamard the target is ``rho_eps`` with
    ``eps`` equal to the marked fraction, i.e. ``|+><+|`` exactly when there
    is no solution.  The map is applied as often as the one-solution
    reference needs to reach ``threshold``, then the qubit is read ``samples``
    times in the ``+/-`` basis; any ``-`` outcome means a solution exists.
    """
    if inst.n > MAX_CLONE_SEARCH_N:
        raise DimTooLarge(f"n={inst.n} exceeds {MAX_CLONE_SEARCH_N}")
    rng = qcore.as_rng(rng)
    start = inst.queries
    zeros, ones = inst.uniform_bitflip_query()
    rho = rho_eps(ones / (zeros + ones))
    k = clone_search_iterations(inst.n, threshold)
    for _ in range(k):
        rho = cnot_clone_map(rho)
    p_minus = max(0.0, minus_probability(rho))
    hits = rng.random(samples) < p_minus
    dist = qcore.trace_distance(DensityMatrix(rho, check=False), DensityMatrix(RHO_PLUS, check=False))
    return CloneSearchOutcome(int(hits.any()), k, inst.queries - start, dist)


# -- signaling by cloning ----------------------------------------------------

def _bob_all_equal(shared: PureState, k: int) -> float:
    """P(all ``k`` computational readings agree) for Bob's qubit plus ``k - 1`` clones."""
    p = np.real(np.diag(qcore.partial_trace(shared, [1]).mat))
    return float(np.sum(p * p ** (k - 1)))


def clone_signal_branches(k: int) -> tuple[float, float]:
    """All-equal probability when Alice does not measure and when she does."""
    if k < 1:
        raise ValueError("k must be at least 1")
    epr = qcore.epr_pair()
    idle = _bob_all_equal(epr, k)
    measured = qcore.measure_ensemble(epr, qcore.computational_basis(2), [0])
    used = sum(prob * _bob_all_equal(st, k) for prob, st in measured.members)
    return idle, used


def clone_signal(k: int) -> BinaryChannel:
    """Channel from Alice's choice (message 1: measure her EPR half) to Bob's all-equal test.

    Bob reads his qubit and ``k - 1`` clones of it; all agreeing decodes as
    1.  Alice's measured branch is handled as an ensemble of post-measurement
    pure states so every clone copies a definite basis state.
    """
    idle, used = clone_signal_branches(k)
    return BinaryChannel(eps0=idle, eps1=1.0 - used)


def clone_signal_frequencies(k: int, trials: int, rng=None) -> tuple[float, float]:
    """Sampled all-equal frequencies ``(unmeasured, measured)`` over ``trials`` runs.

    The unmeasured state ``rho_AB (x) rho_B^{(x)(k-1)}`` is sampled in factored
    form: Bob's original qubit from its marginal, then each clone
    independently from ``rho_B``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = qcore.as_rng(rng)
    epr = qcore.epr_pair()

    def sample_branch(shared: PureState, count: int) -> np.ndarray:
        p1 = float(np.real(qcore.partial_trace(shared, [1]).mat[1, 1]))
        return rng.random((count, k)) < p1

    idle = sample_branch(epr, trials)
    idle_eq = np.all(idle == idle[:, :1], axis=1)
    measured = qcore.measure_ensemble(epr, qcore.computational_basis(2), [0])
    picks = np.array([qcore.sample_index(measured.probs, rng) for _ in range(trials)])
    used_eq = np.empty(trials, dtype=bool)
    for i, (_, st) in enumerate(measured.members):
        mask = picks == i
        rows = sample_branch(st, int(mask.sum()))
        used_eq[mask] = np.all(rows == rows[:, :1], axis=1)
    return float(idle_eq.mean()), float(used_eq.mean())


# -- generic nonlinear maps ------------------------------------------------

@dataclass(frozen=True, eq=False)
class NonlinearMap:
    """Pure-state map given by an amplitude-level evaluator on a ``dim``-dimensional space."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int

    def __call__(self, state: PureState | np.ndarray) -> PureState:
        v = state.amps if isinstance(state, PureState) else np.asarray(state, dtype=complex)
        out = np.asarray(self.evaluator(v), dtype=complex)
        if abs(np.linalg.norm(out) - 1.0) > qcore.INVARIANT_TOL:
            raise NotNormalized("nonlinear map returned an unnormalized state")
        return PureState(out)

    def amps(self, v: np.ndarray) -> np.ndarray:
        return self(v).amps

    @classmethod
    def from_matrix(cls, mat) -> NonlinearMap:
        """Normalized action ``v -> M v / |M v|``."""
        mat = np.array(mat, dtype=complex)

        def evaluate(v: np.ndarray) -> np.ndarray:
            w = mat @ v
            return w / np.linalg.norm(w)

        return cls(evaluate, mat.shape[0])


def _random_unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _tangent(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    t = v - np.vdot(x, v) * x
    return t / np.linalg.norm(t)


@dataclass
class Magnification:
    """Best stretch ratio found and the short segment achieving it.

    ``center`` and ``tangent`` are orthonormal; the segment runs from
    ``center`` to ``cos(h) center + sin(h) tangent``.
    """

    r: float
    center: np.ndarray
    tangent: np.ndarray
    h: float

    @property
    def endpoints(self) -> tuple[PureState, PureState]:
        end = math.cos(self.h) * self.center + math.sin(self.h) * self.tangent
        return PureState(self.center), PureState(end)


def stretch_ratio(S: NonlinearMap, x: np.ndarray, t: np.ndarray, h: float) -> float:
    y = math.cos(h) * x + math.sin(h) * t
    return qcore.fs_angle(S.amps(x), S.amps(y)) / qcore.fs_angle(x, y)


def estimate_magnification(S: NonlinearMap, samples: int = 1000, rng=None, h: float = 1e-5,
                           refine_steps: int = 50) -> Magnification:
    """Lower bound on ``max angle(S a, S b) / angle(a, b)`` over short segments.

    Random seed points with random tangent directions are scored, then the
    best one is refined by ``refine_steps`` rounds of shrinking random
    perturbations that are kept only when they improve the ratio.
    """
    rng = qcore.as_rng(rng)
    best = (-1.0, None, None)
    for _ in range(samples):
        x = _random_unit(S.dim, rng)
        t = _tangent(x, _random_unit(S.dim, rng))
        ratio = stretch_ratio(S, x, t, h)
        if ratio > best[0]:
            best = (ratio, x, t)
    ratio, x, t = best
    step = 0.1
    for _ in range(refine_steps):
        x2 = x + step * _random_unit(S.dim, rng)
        x2 /= np.linalg.norm(x2)
        t2 = _tangent(x2, t + step * _random_unit(S.dim, rng))
        r2 = stretch_ratio(S, x2, t2, h)
        if r2 > ratio:
            ratio, x, t = r2, x2, t2
        else:
            step *= 0.8
    return Magnification(float(ratio), x, t, h)


@dataclass
class AmplifyResult:
    iterations: int
    a: PureState
    b: PureState
    distances: list[float]
    r: float


def nonlinear_amplify(S: NonlinearMap, a: PureState, b: PureState, target: float,
                      magnification: Magnification | None = None, rng=None,
                      max_iterations: int = 10_000) -> AmplifyResult:
    """Separate two states to trace distance ``target`` with a nonlinear map.

    Each round rotates the pair onto the magnifying segment, symmetric about
    its centre along its tangent, and then applies ``S``.  The rotation
    preserves the pair's overlap, so only ``S`` changes their distance.
    """
    distances = [qcore.trace_distance(a, b)]
    if distances[0] >= target:
        return AmplifyResult(0, a, b, distances, float("nan") if magnification is None else magnification.r)
    if magnification is None:
        magnification = estimate_magnification(S, rng=rng)
    if magnification.r <= 1.0 + 1e-6:
        raise NoAmplification(f"magnification {magnification.r:.6g} does not exceed 1")
    plane = (magnification.center, magnification.tangent)
    it = 0
    while distances[-1] < target:
        if it >= max_iterations:
            raise IterationCap(f"trace distance {distances[-1]:.3g} after {max_iterations} iterations")
        U = aligning_unitary(plane, a.amps, b.amps, "midpoint")
        a, b = S(U @ a.amps), S(U @ b.amps)
        distances.append(qcore.trace_distance(a, b))
        it += 1
    return AmplifyResult(it, a, b, distances, magnification.r)


# -- decomposition ambiguity -----------------------------------------------

Term = tuple[complex, np.ndarray, np.ndarray]


def apply_rule_to_first_factor(terms: Sequence[Term], rule: Callable[[np.ndarray], np.ndarray]) -> PureState:
    """Apply a pure-state rule to the first factor of each term ``c |a>|b>`` and renormalize."""
    total = sum(c * np.kron(rule(np.asarray(a, dtype=complex)), np.asarray(b, dtype=complex))
                for c, a, b in terms)
    first, second = (len(terms[0][1]), len(terms[0][2]))
    return qcore.normalize(total, (first, second))


def reset_rule(_v: np.ndarray) -> np.ndarray:
    """The rule ``S_0: |psi> -> |0>``."""
    return qcore.KET0.copy()


@dataclass
class AmbiguityDemo:
    computational: PureState
    hadamard: PureState
    distance: float


def schmidt_ambiguity_demo(product: bool = False) -> AmbiguityDemo:
    """Apply ``S_0`` to the first factor of one state written in two decompositions.

    The default state is ``(|00> + |11>)/sqrt2`` = ``(|++> + |-->)/sqrt2``;
    ``product=True`` uses ``|0>|+>`` = ``(|+>|+> + |->|+>)/sqrt2`` instead.
    The distance is the trace distance between the two resulting states of
    the second factor.
    """
    k0, k1, kp, km = qcore.KET0, qcore.KET1, qcore.KET_PLUS, qcore.KET_MINUS
    r = 1 / math.sqrt(2)
    if product:
        first = [(1.0, k0, kp)]
        second = [(r, kp, kp), (r, km, kp)]
    else:
        first = [(r, k0, k0), (r, k1, k1)]
        second = [(r, kp, kp), (r, km, km)]
    s1 = apply_rule_to_first_factor(first, reset_rule)
    s2 = apply_rule_to_first_factor(second, reset_rule)
    d = qcore.trace_distance(qcore.partial_trace(s1, [1]), qcore.partial_trace(s2, [1]))
    return AmbiguityDemo(s1, s2, d)
