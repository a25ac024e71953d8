"""Final-state projection: linear non-unitary maps followed by renormalization.

Covers the two entanglement signaling protocols, the capacity and
condition-number bounds, single-query search by iterated amplification and
a hybrid-argument harness for query algorithms that interleave oracle calls
with unitary and non-unitary steps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import qcore
from .channels import BinaryChannel, capacity_closed_form
from .errors import (
    DimMismatch,
    DimTooLarge,
    IterationCap,
    MalformedTrace,
    NoAmplification,
    OutOfRange,
    ZeroCapacity,
    ZeroVector,
)
from .qcore import PureState, SvdData, normalize
from .search import SearchInstance

ETA = (math.sqrt(2.0) - math.sqrt(2.0 - math.sqrt(2.0))) ** 2
CAPACITY_CONST = 3.0 / (8.0 * math.log(2.0))
MAX_TRACE_N = 64
SEPARATION_CAP = 10_000


@dataclass(frozen=True, eq=False)
class NonUnitaryMap:
    """Square matrix ``M`` acting as ``s -> M s / |M s|``, with its SVD cached.

    ``delta`` is stored as ``kappa - 1 >= 0``.
    """

    mat: np.ndarray
    svd: SvdData

    def __init__(self, mat, *, require_invertible: bool = True) -> None:
        mat = np.array(mat, dtype=complex, copy=True)
        mat.setflags(write=False)
        data = qcore.svd(mat)
        if require_invertible and data.lambda_min <= qcore.ZERO_THRESHOLD:
            raise ValueError("map is not invertible (smallest singular value is zero)")
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "svd", data)

    @classmethod
    def diag(cls, *values: float) -> NonUnitaryMap:
        return cls(np.diag(np.asarray(values, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def kappa(self) -> float:
        return self.svd.condition_number

    @property
    def delta(self) -> float:
        return self.kappa - 1.0

    @property
    def lambda_min(self) -> float:
        return self.svd.lambda_min

    @property
    def lambda_max(self) -> float:
        return self.svd.lambda_max

    @property
    def phi_min(self) -> np.ndarray:
        """Right singular vector of the smallest singular value."""
        return self.svd.right_vectors[:, -1]

    @property
    def phi_max(self) -> np.ndarray:
        return self.svd.right_vectors[:, 0]

    @property
    def psi_min(self) -> np.ndarray:
        """Left singular vector of the smallest singular value."""
        return self.svd.left_vectors[:, -1]

    @property
    def psi_max(self) -> np.ndarray:
        return self.svd.left_vectors[:, 0]


def apply_map(M: NonUnitaryMap, s: PureState, targets: Sequence[int] | None = None) -> PureState:
    """Apply ``M`` (tensored with identity elsewhere) and renormalize."""
    if targets is None:
        if s.dim != M.dim:
            raise DimMismatch(f"map dimension {M.dim} does not match state dimension {s.dim}")
        v = M.mat @ s.amps
    else:
        v = qcore.apply_operator(s, M.mat, targets)
    return normalize(v, s.dims)


# -- signaling -------------------------------------------------------------

class Direction(enum.Enum):
    ALICE_TO_BOB = "alice_to_bob"
    BOB_TO_ALICE = "bob_to_alice"


def shared_state(M: NonUnitaryMap) -> PureState:
    """``(|phi_min>|0> + |phi_max>|1>)/sqrt2`` with Alice holding M's register."""
    if M.dim < 2:
        raise DimMismatch("signaling needs a map on at least two dimensions")
    amps = (np.kron(M.phi_min, qcore.KET0) + np.kron(M.phi_max, qcore.KET1)) / np.sqrt(2)
    return PureState(amps, (M.dim, 2))


def signal_channel(M: NonUnitaryMap, direction: Direction | str = Direction.ALICE_TO_BOB) -> BinaryChannel:
    """Simulate one use of an entanglement-assisted signaling protocol.

    Alice to Bob: Alice applies ``M`` to her half (message 1) or not
    (message 0); Bob reads his qubit in the computational basis.

    Bob to Alice: Bob measures his qubit or not, Alice then applies ``M`` and
    measures in ``M``'s left singular basis, decoding the largest-singular
    outcome as 1.  Bob's measured branch is propagated as an ensemble of pure
    states, never as a density matrix, because the map is applied afterwards.
    Channel input 0 is the message that leaves the receiver's outcome
    unbiased (Bob measuring), so both directions report ``eps0 = 1/2``.
    """
    direction = Direction(direction)
    shared = shared_state(M)
    if direction is Direction.ALICE_TO_BOB:
        p_idle = qcore.partial_trace(shared, [1]).probabilities()
        p_used = qcore.partial_trace(apply_map(M, shared, [0]), [1]).probabilities()
        return BinaryChannel(eps0=_clip01(p_idle[1]), eps1=_clip01(p_used[0]))

    alice_basis = M.svd.left_vectors.T
    top = 0  # index of the largest singular value in the descending SVD

    def p_top(state: PureState) -> float:
        probs, _ = qcore.measurement_ensemble(state, alice_basis, [0])
        return float(probs[top])

    p_idle_top = p_top(apply_map(M, shared, [0]))
    measured = qcore.measure_ensemble(shared, qcore.computational_basis(2), [1])
    measured = measured.map(lambda st: apply_map(M, st, [0]))
    p_measured_top = sum(p * p_top(st) for p, st in measured.members)
    return BinaryChannel(eps0=_clip01(p_measured_top), eps1=_clip01(1.0 - p_idle_top))


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def fsp_capacity_bound(delta: float) -> float:
    """Lower bound ``3/(8 ln 2) * delta**2`` claimed for the signaling capacity."""
    if delta < 0:
        raise OutOfRange("delta must be non-negative")
    return CAPACITY_CONST * delta**2


# -- amplification ---------------------------------------------------------

def _phase_aligned(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    ov = np.vdot(a, b)
    if abs(ov) > 0:
        b = b * (abs(ov) / ov)
    return b, float(abs(ov))


def aligning_unitary(target_plane: tuple[np.ndarray, np.ndarray], a: np.ndarray, b: np.ndarray,
                     anchor: str = "midpoint") -> np.ndarray:
    """Unitary placing the pair ``(a, b)`` in the plane ``(u0, u1)``.

    ``anchor="midpoint"`` puts the pair symmetrically about ``u0`` along
    ``u1``; ``anchor="first"`` puts ``a`` exactly on ``u0`` and ``b`` on the
    ``u1`` side.  The relative phase is irrelevant because states are rays.
    """
    u0, u1 = target_plane
    b, ov = _phase_aligned(a, b)
    if anchor == "midpoint":
        m, p = a + b, a - b
    elif anchor == "first":
        m, p = a, b - ov * a
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    if np.linalg.norm(p) <= qcore.ZERO_THRESHOLD:
        raise NoAmplification("states are identical; nothing to separate")
    m = m / np.linalg.norm(m)
    p = p / np.linalg.norm(p)
    src = qcore.complete_unitary(np.column_stack([m, p]))
    dst = qcore.complete_unitary(np.column_stack([u0, u1]))
    return dst @ src.conj().T


@dataclass
class SeparationResult:
    iterations: int
    a: PureState
    b: PureState
    distances: list[float]
    unitaries: list[np.ndarray] = field(repr=False)


def separate_states(M: NonUnitaryMap, a: PureState, b: PureState, target: float,
                    anchor: str = "midpoint", max_iterations: int = SEPARATION_CAP) -> SeparationResult:
    """Alternate an aligning unitary with ``M`` until the pair's trace distance reaches ``target``.

    Before each application of ``M`` the pair is rotated into the plane of
    ``M``'s extreme right singular vectors, centred on the smallest one,
    which is where the normalized map stretches angles the most (by about
    ``kappa`` per step).
    """
    if M.kappa <= 1.0 + 1e-12:
        raise NoAmplification("map is unitary (condition number 1)")
    if a.dim != M.dim or b.dim != M.dim:
        raise DimMismatch("states and map have different dimensions")
    if qcore.trace_distance(a, b) <= qcore.ZERO_THRESHOLD:
        raise NoAmplification("states are identical; nothing to separate")
    plane = (M.phi_min, M.phi_max)
    distances = [qcore.trace_distance(a, b)]
    unitaries: list[np.ndarray] = []
    while distances[-1] < target:
        if len(unitaries) >= max_iterations:
            raise IterationCap(f"trace distance {distances[-1]:.3g} after {max_iterations} iterations")
        U = aligning_unitary(plane, a.amps, b.amps, anchor)
        a = normalize(M.mat @ (U @ a.amps), a.dims)
        b = normalize(M.mat @ (U @ b.amps), b.dims)
        unitaries.append(U)
        distances.append(qcore.trace_distance(a, b))
    return SeparationResult(len(unitaries), a, b, distances, unitaries)


@dataclass
class SearchOutcome:
    solutions: int
    map_applications: int
    queries: int
    register_zero: bool = True


def flag_state(zeros: int, ones: int) -> np.ndarray:
    """Target-qubit state after the query, Hadamards and a ``0...0`` register outcome."""
    v = np.array([zeros, ones], dtype=float)
    return v / np.linalg.norm(v)


def _embed(v: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=complex)
    out[: v.size] = v
    return out


def fsp_search(inst: SearchInstance, M: NonUnitaryMap, rng=None, samples: int = 100,
               target: float = 0.3) -> SearchOutcome:
    """Decide zero vs one marked item with one query and iterated ``M``.

    The query on the uniform superposition is followed by Hadamards on the
    register; a ``0...0`` register outcome leaves the target qubit in
    ``((N-s)|0> + s|1>)/norm``.  Any other register outcome is impossible
    without a solution and ends the search.  The unitary schedule is fixed
    in advance from the two reference states (s = 0 and s = 1), with the
    s = 0 state parked on the repelling fixed point of ``M``; ``samples``
    projective measurements of the amplified state then decide.
    """
    rng = qcore.as_rng(rng)
    if M.kappa <= 1.0 + 1e-12:
        raise NoAmplification("map is unitary (condition number 1)")
    start = inst.queries
    zeros, ones = inst.uniform_bitflip_query()
    N = zeros + ones
    p_register_zero = (zeros**2 + ones**2) / N**2
    if rng.random() >= p_register_zero:
        return SearchOutcome(1, 0, inst.queries - start, register_zero=False)

    held = PureState(_embed(flag_state(zeros, ones), M.dim))
    ref0 = PureState(_embed(flag_state(N, 0), M.dim))
    ref1 = PureState(_embed(flag_state(N - 1, 1), M.dim))
    schedule = separate_states(M, ref0, ref1, target, anchor="first")
    for U in schedule.unitaries:
        held = normalize(M.mat @ (U @ held.amps))
    p_flip = max(0.0, 1.0 - schedule.a.fidelity(held))
    hits = rng.random(samples) < p_flip
    return SearchOutcome(int(hits.any()), schedule.iterations, inst.queries - start)


# -- hybrid argument -------------------------------------------------------

Instruction = Union[str, np.ndarray, NonUnitaryMap]


@dataclass(frozen=True, eq=False)
class AlgorithmTrace:
    """States of a query algorithm for every marked item and without an oracle.

    ``psi_x[x, k]`` is the state after the k-th block when item ``x`` is
    marked; ``psi_free[k]`` is the same run with every oracle call skipped.
    Row 0 is the common starting state.
    """

    psi_x: np.ndarray
    psi_free: np.ndarray

    @property
    def N(self) -> int:
        return self.psi_free.shape[1]

    @property
    def q(self) -> int:
        return self.psi_free.shape[0] - 1


def _split_blocks(program: Sequence[Instruction]) -> tuple[list[Instruction], list[list[Instruction]]]:
    prefix: list[Instruction] = []
    blocks: list[list[Instruction]] = []
    for op in program:
        if isinstance(op, str):
            if op != "oracle":
                raise ValueError(f"unknown instruction {op!r}")
            blocks.append([])
        elif blocks:
            blocks[-1].append(op)
        else:
            prefix.append(op)
    return prefix, blocks


def _step(v: np.ndarray, op: Instruction) -> np.ndarray:
    if isinstance(op, NonUnitaryMap):
        w = op.mat @ v
        norm = np.linalg.norm(w)
        if norm <= qcore.ZERO_THRESHOLD:
            raise ZeroVector("map annihilated the state")
        return w / norm
    return np.asarray(op) @ v


def run_program(psi0, program: Sequence[Instruction]) -> AlgorithmTrace:
    """Execute ``program`` (unitaries, maps and ``"oracle"`` markers) for every marked item.

    Operations before the first oracle call only prepare the common start
    state.  Oracles are phase flips ``1 - 2|x><x|``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    N = psi0.size
    if N > MAX_TRACE_N:
        raise DimTooLarge(f"trace dimension {N} exceeds {MAX_TRACE_N}")
    prefix, blocks = _split_blocks(program)
    for op in prefix:
        psi0 = _step(psi0, op)
    q = len(blocks)
    psi_x = np.empty((N, q + 1, N), dtype=complex)
    psi_free = np.empty((q + 1, N), dtype=complex)
    psi_free[0] = psi0
    for k, block in enumerate(blocks, start=1):
        v = psi_free[k - 1]
        for op in block:
            v = _step(v, op)
        psi_free[k] = v
    for x in range(N):
        v = psi0.copy()
        psi_x[x, 0] = v
        for k, block in enumerate(blocks, start=1):
            v = v.copy()
            v[x] = -v[x]
            for op in block:
                v = _step(v, op)
            psi_x[x, k] = v
    return AlgorithmTrace(psi_x, psi_free)


def grover_program(N: int, q: int) -> tuple[np.ndarray, list[Instruction]]:
    """Uniform start state and ``q`` rounds of oracle + inversion about the mean."""
    s = np.full(N, 1.0 / np.sqrt(N), dtype=complex)
    diffusion = 2.0 * np.outer(s, s.conj()) - np.eye(N)
    return s, ["oracle", diffusion] * q


@dataclass
class HybridReport:
    C: np.ndarray  # C_1..C_q
    D: np.ndarray  # D_0..D_q
    R: np.ndarray  # R_1..R_q
    B: float
    c_bound_ok: np.ndarray
    d_bound_ok: np.ndarray
    d0_zero: bool
    success_probability: float

    @property
    def all_checks_pass(self) -> bool:
        return bool(self.c_bound_ok.all() and self.d_bound_ok.all() and self.d0_zero)


def hybrid_quantities(trace: AlgorithmTrace) -> HybridReport:
    """Hybrid-argument sums for a trace.

    ``C_k = sum_x |O_x psi_{k-1}^x - psi_{k-1}|^2``, ``D_k = sum_x |psi_k^x - psi_k|^2``,
    ``R_k = D_k - C_k`` and ``B = max_k R_k``.  Also evaluates
    ``C_k <= D_{k-1} + 4 sqrt(D_{k-1}) + 4``, ``D_k <= (4 + B) k**2`` and ``D_0 = 0``.
    """
    psi_x, psi_free = trace.psi_x, trace.psi_free
    if psi_free.ndim != 2 or psi_x.shape != (psi_free.shape[1],) + psi_free.shape:
        raise MalformedTrace(f"inconsistent shapes {psi_x.shape} and {psi_free.shape}")
    norms = np.concatenate([np.linalg.norm(psi_x, axis=2).ravel(), np.linalg.norm(psi_free, axis=1)])
    if np.max(np.abs(norms - 1.0)) > qcore.INVARIANT_TOL:
        raise MalformedTrace("trace contains unnormalized states")
    N, q = trace.N, trace.q
    diff = psi_x - psi_free[None, :, :]
    D = np.sum(np.abs(diff) ** 2, axis=(0, 2))
    flipped = psi_x[:, :-1, :].copy()
    idx = np.arange(N)
    flipped[idx, :, idx] *= -1
    C = np.sum(np.abs(flipped - psi_free[None, :-1, :]) ** 2, axis=(0, 2))
    R = D[1:] - C
    B = float(R.max()) if q else 0.0
    k = np.arange(1, q + 1)
    c_ok = C <= D[:-1] + 4 * np.sqrt(D[:-1]) + 4 + 1e-9
    d_ok = D[1:] <= (4 + B) * k**2 * (1 + 1e-9)
    success = float(np.min(np.abs(psi_x[idx, -1, idx]) ** 2))
    return HybridReport(C, D, R, B, c_ok, d_ok, bool(D[0] == 0.0), success)


def speedup_capacity_bound(q: int, N: int) -> float:
    """Capacity certified by a ``q``-query search on ``N`` items.

    ``eps = eta/(2 q**2) - 2/N``; the map then supports a channel with
    ``eps0 = 1/2`` and ``eps1 <= 1/2 - eps/8``, whose capacity is returned.
    """
    if q < 1 or N < 2:
        raise OutOfRange("need q >= 1 and N >= 2")
    eps = ETA / (2 * q**2) - 2.0 / N
    if eps <= 0:
        return 0.0
    return capacity_closed_form(BinaryChannel(0.5, 0.5 - eps / 8))


def condition_bound_from_tvd(Delta: float) -> float:
    """Smallest condition number compatible with an observed output TVD ``Delta``."""
    if not 0.0 <= Delta <= 1.0:
        raise OutOfRange(f"Delta={Delta!r} outside [0, 1]")
    return math.sqrt(1.0 + 2.0 * Delta)


def search_cost_from_capacity(N: int, C: float) -> int:
    """Map applications ``ceil(log N / log(1 + C**2))`` for single-query search."""
    if C <= 0:
        raise ZeroCapacity("capacity must be positive")
    ratio = math.log2(N) / math.log2(1.0 + C * C)
    return math.ceil(ratio - 1e-12)
