"""Measurement with a modified Born rule ``p_x ~ |alpha_x|**(2 + delta)``.

Postselection is simulated by spreading one branch over ``2**k`` ancilla
basis states.  Those registers are never built: a branch carries a
multiplicity weight and its outcome mass picks up ``2**(-k|delta|/2)``
analytically, which keeps ``k`` in the hundreds cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np

from . import qcore
from .channels import tvd
from .errors import OutOfRange, ZeroDelta, ZeroVector
from .qcore import PureState
from .search import SearchInstance

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BornModel:
    """Outcome weights ``|alpha|**p`` with ``p = 2 + delta > 0``."""

    delta: float

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise OutOfRange(f"exponent 2 + delta = {self.p} must be positive")

    @property
    def p(self) -> float:
        return 2.0 + self.delta

    def require_nonzero(self) -> None:
        if self.delta == 0:
            raise ZeroDelta("construction needs a nonzero Born-rule deviation")


def born_probabilities(amps, model: BornModel) -> np.ndarray:
    """Normalized weights ``|a_x|**p / sum_y |a_y|**p``.

    Amplitudes are rescaled by their largest magnitude first, which leaves
    the result unchanged and avoids underflow for large ``p``.
    """
    mags = np.abs(np.asarray(amps, dtype=complex).ravel())
    top = mags.max(initial=0.0)
    if top <= 0:
        raise ZeroVector("all amplitudes are zero")
    w = (mags / top) ** model.p
    return w / w.sum()


def born_sample(s: PureState, model: BornModel, rng=None) -> int:
    return qcore.sample_index(born_probabilities(s.amps, model), qcore.as_rng(rng))


# -- postselection gadget --------------------------------------------------

@dataclass(frozen=True)
class WeightedBranches:
    """Terms ``flag, label, amplitude, weight`` of a state before postselection.

    A branch of weight ``w`` stands for ``w`` orthogonal basis terms that all
    carry ``amplitude``; under the modified rule it contributes
    ``w * |amplitude|**p`` to the outcome mass.  ``flag`` is the value of the
    qubit being postselected and ``label`` indexes the remaining register,
    whose dimension is ``label_dim``.
    """

    flags: np.ndarray
    labels: np.ndarray
    amplitudes: np.ndarray
    weights: np.ndarray
    label_dim: int

    def __init__(self, terms: Sequence[tuple[int, int, complex, float]], label_dim: int) -> None:
        if not terms:
            raise ZeroVector("no branches")
        flags, labels, amps, weights = zip(*terms)
        weights = np.asarray(weights, dtype=float)
        amps = np.asarray(amps, dtype=complex)
        labels = np.asarray(labels, dtype=int)
        if np.any(weights <= 0):
            raise ValueError("branch weights must be positive")
        if not np.any(np.abs(amps) > 0):
            raise ZeroVector("all branch amplitudes are zero")
        if np.any((labels < 0) | (labels >= label_dim)):
            raise ValueError("branch label outside the register")
        object.__setattr__(self, "flags", np.asarray(flags, dtype=int))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "label_dim", int(label_dim))

    def masses(self, model: BornModel) -> np.ndarray:
        """Unspread outcome masses ``w |a|**p`` per branch (common scale removed)."""
        mags = np.abs(self.amplitudes)
        return self.weights * (mags / mags.max()) ** model.p


def suppression_factor(delta: float, k: int) -> float:
    """Relative mass factor ``2**(-k|delta|/2)`` picked up by the spread branch."""
    return 2.0 ** (-k * abs(delta) / 2.0)


def postselect_leakage(kept_mass: float, suppressed_mass: float, delta: float, k: int) -> float:
    """Probability of the unwanted flag: ``S f / (K + S f)`` with ``f = 2**(-k|delta|/2)``.

    Evaluated as a logistic function of the log mass ratio, so it stays
    accurate when ``f`` underflows.
    """
    if suppressed_mass <= 0:
        return 0.0
    if kept_mass <= 0:
        return 1.0
    t = math.log(kept_mass) - math.log(suppressed_mass) + k * abs(delta) / 2.0 * LN2
    return math.exp(-t) / (1.0 + math.exp(-t)) if t > 0 else 1.0 / (1.0 + math.exp(t))


@dataclass
class PostselectResult:
    state: PureState
    leakage: float
    suppression: float
    kept_mass: float
    suppressed_mass: float


def simulate_postselect(branches: WeightedBranches, model: BornModel, k: int, keep: int = 0) -> PostselectResult:
    """Simulate postselecting ``flag == keep`` with ``k`` controlled-Hadamard ancillas.

    For ``delta > 0`` the ancillas are attached to the unwanted branches,
    for ``delta < 0`` to the kept ones; either way the unwanted mass is
    scaled by ``2**(-k|delta|/2)`` relative to the kept mass.  Returns the
    renormalized state of the label register given the kept flag (a branch
    of weight ``w`` contributes ``sqrt(w) * amplitude``) and the leakage.
    """
    model.require_nonzero()
    if k < 1:
        raise OutOfRange("need at least one ancilla")
    masses = branches.masses(model)
    kept = branches.flags == keep
    K = float(masses[kept].sum())
    S = float(masses[~kept].sum())
    if K <= 0:
        raise ZeroVector("the kept branch has zero amplitude")
    amps = np.zeros(branches.label_dim, dtype=complex)
    np.add.at(amps, branches.labels[kept], branches.amplitudes[kept] * np.sqrt(branches.weights[kept]))
    return PostselectResult(
        state=qcore.normalize(amps),
        leakage=postselect_leakage(K, S, model.delta, k),
        suppression=suppression_factor(model.delta, k),
        kept_mass=K,
        suppressed_mass=S,
    )


def ancillas_for_leakage(model: BornModel, mass_ratio: float, target: float) -> int:
    """Smallest ``k`` with leakage at most ``target`` when ``S/K = mass_ratio``."""
    if mass_ratio <= 0:
        return 1
    # leakage <= target  <=>  f <= target / ((1 - target) * mass_ratio)
    need = math.log2(mass_ratio * (1.0 - target) / target)
    k = max(1, math.ceil(2.0 * need / abs(model.delta)))
    while k > 1 and postselect_leakage(1.0, mass_ratio, model.delta, k - 1) <= target:
        k -= 1
    while postselect_leakage(1.0, mass_ratio, model.delta, k) > target:
        k += 1
    return k


# -- teleportation ---------------------------------------------------------

@dataclass
class TeleportResult:
    fidelity: float
    k: int
    leakage: float
    outcome_probabilities: np.ndarray  # over Alice's (c, a) outcomes, index 2c + a


def teleport_branches(psi: PureState) -> WeightedBranches:
    """Teleportation circuit on (input, Alice, Bob) up to Alice's measurement.

    After ``CNOT(input -> Alice)`` and ``H(input)`` the state is
    ``1/2 sum_{c,a} |c a> X^a Z^c |psi>``; the flag is ``c OR a`` and labels
    run over ``(c, a, b)``.
    """
    state = qcore.tensor(psi, qcore.epr_pair())
    v = qcore.apply_operator(state, qcore.CNOT, [0, 1])
    v = qcore.apply_operator(v, qcore.H, [0], dims=state.dims)
    terms = []
    for idx, amp in enumerate(v):
        if abs(amp) > 0:
            c, a = idx >> 2, (idx >> 1) & 1
            terms.append((int(c or a), idx, complex(amp), 1.0))
    return WeightedBranches(terms, 8)


def teleport_signal(model: BornModel, n: int, psi: PureState | None = None, rng=None) -> TeleportResult:
    """Teleport one qubit with Alice's Bell outcome forced to ``00`` by the ancilla gadget.

    All qubits are read in the computational basis under the modified rule
    and Bob's qubit is marginalized, so each Alice outcome ``ca`` has mass
    ``sum_b |<cab|state>|**p`` (times the suppression factor unless
    ``ca = 00``).  ``k`` is the smallest ancilla count with leakage at most
    ``2**-n``.  Bob applies no correction, so the fidelity is
    ``sum_ca P(ca) |<psi|X^a Z^c psi>|**2``.
    """
    model.require_nonzero()
    if n < 1:
        raise OutOfRange("n must be at least 1")
    if psi is None:
        psi = qcore.haar_state(1, rng)
    branches = teleport_branches(psi)
    masses = branches.masses(model)
    alice = branches.labels >> 1
    per_outcome = np.bincount(alice, weights=masses, minlength=4)
    K, S = per_outcome[0], per_outcome[1:].sum()
    k = ancillas_for_leakage(model, S / K, 2.0 ** -n)
    leak = postselect_leakage(K, S, model.delta, k)
    probs = np.empty(4)
    probs[0] = 1.0 - leak
    probs[1:] = leak * per_outcome[1:] / S
    fidelity = 0.0
    for ca in range(4):
        c, a = ca >> 1, ca & 1
        bob = psi.amps.copy()
        if c:
            bob = qcore.Z @ bob
        if a:
            bob = qcore.X @ bob
        fidelity += probs[ca] * abs(np.vdot(psi.amps, bob)) ** 2
    return TeleportResult(float(fidelity), k, leak, probs)


# -- search ----------------------------------------------------------------

@dataclass
class BornSearchOutcome:
    solutions: int
    k: int
    queries: int
    p_flag: float


def born_search_ancillas(n: int, model: BornModel) -> int:
    """Ancilla count ``ceil(2n/|delta|) + 2`` used by the search."""
    return math.ceil(2 * n / abs(model.delta)) + 2


def born_search(inst: SearchInstance, model: BornModel, rng=None, samples: int = 100) -> BornSearchOutcome:
    """Decide zero vs one marked item with one query.

    The bit-flip query on the uniform superposition yields ``N - s`` flag-0
    terms and ``s`` flag-1 terms, all of amplitude ``N**-1/2``.  The flag-0
    side is suppressed with ``ceil(2n/|delta|) + 2`` ancillas, which gives
    the flag-1 outcome probability above one half when ``s = 1`` and exactly
    zero when ``s = 0``.  The flag is sampled ``samples`` times; any 1
    means a solution exists.
    """
    model.require_nonzero()
    rng = qcore.as_rng(rng)
    start = inst.queries
    zeros, ones = inst.uniform_bitflip_query()
    amp = inst.N ** -0.5
    terms = [(0, 0, amp, float(zeros))]
    if ones:
        terms.append((1, 1, amp, float(ones)))
    branches = WeightedBranches(terms, 2)
    k = born_search_ancillas(inst.n, model)
    masses = branches.masses(model)
    K = float(masses[branches.flags == 1].sum())
    S = float(masses[branches.flags == 0].sum())
    p_flag = 1.0 - postselect_leakage(K, S, model.delta, k) if K > 0 else 0.0
    hits = rng.random(samples) < p_flag
    return BornSearchOutcome(int(hits.any()), k, inst.queries - start, p_flag)


# -- lower bounds ----------------------------------------------------------

def delta_bound_from_signaling(epsilon: float, n: int) -> float:
    """First-order bound ``|delta| >= epsilon / n`` for an ``n``-qubit signal of bias ``epsilon``."""
    if not 0.0 < epsilon <= 1.0:
        raise OutOfRange(f"epsilon={epsilon!r} outside (0, 1]")
    if n < 1:
        raise OutOfRange("n must be at least 1")
    return epsilon / n


def delta_bound_from_search(Q, N: int, m: int):
    """First-order bound ``|delta| >= max(0, (1/6 - 2Q/sqrt(N)) / m)``.

    Returns an exact ``Fraction`` when ``N`` is a perfect square and ``Q``
    is rational, a float otherwise.
    """
    root = math.isqrt(N)
    if root * root == N and isinstance(Q, Rational):
        value = (Fraction(1, 6) - Fraction(2) * Fraction(Q) / root) / m
        return max(Fraction(0), value)
    return max(0.0, (1.0 / 6.0 - 2.0 * float(Q) / math.sqrt(N)) / m)


def signaling_tvd(state: PureState, U: np.ndarray, alice: Sequence[int], model: BornModel) -> float:
    """Bias of a one-shot signal: Alice applies ``U`` to ``alice`` qubits or not.

    Every qubit is read in the computational basis under the modified rule;
    the returned value is the total variation distance between Bob's
    marginal outcome distributions in the two cases.
    """
    bob = [i for i in range(state.n_subsystems) if i not in set(alice)]
    shape = state.dims

    def bob_marginal(amps: np.ndarray) -> np.ndarray:
        p = born_probabilities(amps, model).reshape(shape)
        return p.sum(axis=tuple(alice)).ravel() if alice else p.ravel()

    p0 = bob_marginal(state.amps)
    p1 = bob_marginal(qcore.apply_operator(state, U, alice))
    if not bob:
        return 0.0
    return tvd(p0, p1)


def max_signaling_tvd(model: BornModel, n_qubits: int, n_alice: int, trials: int, rng=None) -> float:
    """Largest signaling bias found over random shared states and Alice unitaries."""
    rng = qcore.as_rng(rng)
    alice = list(range(n_alice))
    best = 0.0
    for _ in range(trials):
        state = qcore.haar_state(n_qubits, rng)
        U = qcore.haar_unitary(2**n_alice, rng)
        best = max(best, signaling_tvd(state, U, alice, model))
    return best


# -- rule uniqueness -------------------------------------------------------

@dataclass
class Witness:
    kind: str  # "scale" or "tensor"
    state: np.ndarray
    other: complex | np.ndarray
    difference: float


@dataclass
class ScaleInvarianceResult:
    passed: bool
    witness: Witness | None = None


def _rule_probs(rule: Callable[[np.ndarray], np.ndarray], amps: np.ndarray) -> np.ndarray:
    w = np.asarray(rule(amps), dtype=float)
    return w / w.sum()


def scale_invariance_check(rule: Callable[[np.ndarray], np.ndarray], trials: int = 200, rng=None,
                           tol: float = 1e-9) -> ScaleInvarianceResult:
    """Test whether ``rule`` gives probabilities that ignore global scale and phase and factor over products.

    Fixed probes (``k = 1/2`` and a pure phase) run first, then ``trials``
    random states with random complex ``k`` of modulus at most 1.  Returns
    the first violation found.
    """
    rng = qcore.as_rng(rng)
    probe = np.array([np.sqrt(1 / 3), np.sqrt(2 / 3)], dtype=complex)
    # the phase probe needs amplitudes of differing phase to expose phase dependence
    scalars = [0.5, np.exp(1j * np.pi / 3)]
    states = [probe, probe * np.array([1, 1j])]
    for _ in range(trials):
        d = int(rng.integers(2, 5))
        states.append(_random_amps(d, rng))
        scalars.append(rng.uniform(0.05, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
    for amps, k in zip(states, scalars):
        diff = float(np.max(np.abs(_rule_probs(rule, k * amps) - _rule_probs(rule, amps))))
        if diff > tol:
            return ScaleInvarianceResult(False, Witness("scale", amps, k, diff))
    pairs = [(probe, np.array([np.sqrt(0.1), np.sqrt(0.9) * 1j]))]
    pairs += [(_random_amps(2, rng), _random_amps(int(rng.integers(2, 4)), rng)) for _ in range(trials)]
    for a, b in pairs:
        joint = _rule_probs(rule, np.kron(a, b))
        product = np.kron(_rule_probs(rule, a), _rule_probs(rule, b))
        diff = float(np.max(np.abs(joint - product)))
        if diff > tol:
            return ScaleInvarianceResult(False, Witness("tensor", a, b, diff))
    return ScaleInvarianceResult(True)


def _random_amps(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
