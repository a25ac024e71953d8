"""Postselection onto a fixed generic state and its use as a ``|0>`` postselector.

A controlled-SWAP between two registers holding ``psi'`` and ``psi``,
followed by projecting the second register onto ``psi``, suppresses the
control's ``|1>`` branch by the overlap ``<psi|psi'>``.  For Haar-random
``psi`` and ``psi' = P psi`` with ``P`` a Pauli on one qubit, that overlap
has mean square ``1/(N+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import qcore
from .errors import DimMismatch, DimTooLarge, OutOfRange, ZeroOverlap
from .qcore import DensityMatrix, PureState

MAX_GADGET_QUBITS = 6
MAX_OVERLAP_QUBITS = 10


@dataclass(frozen=True, eq=False)
class GenericPostselector:
    """Projection onto one fixed ``n``-qubit state, reused on every call."""

    psi: PureState

    def __post_init__(self) -> None:
        if len(set(self.psi.dims)) != 1 or self.psi.dims[0] != 2:
            object.__setattr__(self, "psi", PureState(self.psi.amps, qcore.qubit_dims(self._qubits())))

    def _qubits(self) -> int:
        n = int(self.psi.dim).bit_length() - 1
        if 2**n != self.psi.dim:
            raise DimMismatch(f"dimension {self.psi.dim} is not a power of two")
        return n

    @property
    def n(self) -> int:
        return len(self.psi.dims)

    @property
    def N(self) -> int:
        return self.psi.dim

    @classmethod
    def haar(cls, n: int, rng=None) -> GenericPostselector:
        return cls(qcore.haar_state(n, rng))

    def project(self, amps: np.ndarray, axis: int = -1) -> np.ndarray:
        """Contract ``axis`` of an amplitude tensor with ``<psi|``."""
        return np.tensordot(amps, self.psi.amps.conj(), axes=([axis], [0]))


def _check_size(g: GenericPostselector) -> None:
    if g.n > MAX_GADGET_QUBITS:
        raise DimTooLarge(f"n={g.n} exceeds {MAX_GADGET_QUBITS}")


def extract_copy(g: GenericPostselector, exact: bool = False) -> PureState:
    """Postselect half of ``sum_x |x>|x>`` onto the fixed state.

    Projecting onto ``psi`` leaves ``sum_x <psi|x> |x> = psi*`` on the first
    register.  With ``exact=True`` the projection target is ``psi*`` so the
    output is ``psi`` itself.
    """
    _check_size(g)
    N = g.N
    phi = np.eye(N, dtype=complex).ravel()  # sum_x |x>|x>, unnormalized
    target = g.psi.amps.conj() if exact else g.psi.amps
    out = phi.reshape(N, N) @ target.conj()
    norm = np.linalg.norm(out)
    if norm <= qcore.ZERO_THRESHOLD:
        raise ZeroOverlap("projection onto the fixed state vanished")
    return PureState(out / norm, g.psi.dims)


GADGET_PAULIS = {"x": qcore.X, "z": qcore.Z}


def partner_state(g: GenericPostselector, mode: str = "x") -> np.ndarray:
    """``psi' = P psi`` with ``P`` = X (mode ``"x"``) or Z (mode ``"z"``) on the first qubit."""
    try:
        pauli = GADGET_PAULIS[mode]
    except KeyError:
        raise ValueError(f"unknown gadget mode {mode!r}") from None
    return qcore.apply_operator(g.psi, pauli, [0])


def direct_overlap(g: GenericPostselector, mode: str = "x") -> complex:
    return complex(np.vdot(g.psi.amps, partner_state(g, mode)))


@dataclass
class GadgetResult:
    """Control qubit plus payload after the gadget, with the middle register traced out.

    ``residual`` is the ``|1>`` amplitude relative to its input value,
    ``sqrt(p1/p0) * |alpha|/|beta|``; it equals ``|<psi|psi'>|``.
    """

    state: DensityMatrix
    residual: float
    overlap: complex
    success_probability: float

    @property
    def one_weight(self) -> float:
        return float(np.real(np.trace(self.state.mat.reshape(2, -1, 2, self.state.dim // 2)[1, :, 1, :])))


def gadget_postselect_zero(g: GenericPostselector, state: PureState, mode: str = "x") -> GadgetResult:
    """Simulate postselecting the first qubit of ``state`` onto ``|0>``.

    The tensor ``state (x) psi' (x) psi`` is built explicitly, a SWAP of the
    last two registers is applied where the first qubit is 1, the last
    register is projected onto ``psi`` and the middle register is traced
    out.
    """
    _check_size(g)
    if state.dims[0] != 2:
        raise DimMismatch("first subsystem of the input must be a qubit")
    P = state.dim // 2
    if state.dim > qcore.MAX_MIXED_DIM:
        raise DimTooLarge(f"control plus payload dimension {state.dim} exceeds {qcore.MAX_MIXED_DIM}")
    N = g.N
    partner = partner_state(g, mode)
    inp = state.amps.reshape(2, P)
    full = np.einsum("tp,m,b->tpmb", inp, partner, g.psi.amps)
    full[1] = np.swapaxes(full[1], 1, 2)  # controlled SWAP of middle and bottom registers
    kept = g.project(full)  # (2, P, N)
    flat = kept.reshape(2 * P, N)
    mass = float(np.sum(np.abs(flat) ** 2))
    if mass <= qcore.ZERO_THRESHOLD:
        raise ZeroOverlap("gadget postselection has zero success probability")
    rho = flat @ flat.conj().T / mass
    out = DensityMatrix(rho, state.dims)
    p0 = float(np.sum(np.abs(inp[0]) ** 2))
    p1 = float(np.sum(np.abs(inp[1]) ** 2))
    w1 = float(np.sum(np.abs(kept[1]) ** 2)) / mass
    residual = float(np.sqrt(w1 / (1.0 - w1) * p0 / p1)) if p1 > 0 and w1 < 1 else 0.0
    return GadgetResult(out, residual, direct_overlap(g, mode), mass)


def haar_mean_square_overlap(N: int) -> Fraction:
    """Exact Haar average of ``|<psi|P psi>|**2`` for a traceless one-qubit Pauli ``P``.

    The fourth-moment integral gives ``N/(N^2-1) - 1/(N^2-1) = 1/(N+1)``.
    """
    return Fraction(N, N * N - 1) - Fraction(1, N * N - 1)


@dataclass
class OverlapEstimate:
    mc: float
    exact: float
    stderr: float

    @property
    def z(self) -> float:
        return (self.mc - self.exact) / self.stderr


def haar_overlaps(n: int, samples: int, rng=None, op: str = "x") -> np.ndarray:
    """``|<psi|P psi>|**2`` for ``samples`` Haar-random ``n``-qubit states."""
    rng = qcore.as_rng(rng)
    N = 2**n
    v = rng.normal(size=(samples, N)) + 1j * rng.normal(size=(samples, N))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    half = v.reshape(samples, 2, N // 2)
    if op == "x":
        partner = half[:, ::-1, :]
    elif op == "z":
        partner = half * np.array([1, -1])[None, :, None]
    else:
        raise ValueError(f"unknown operator {op!r}")
    ov = np.sum(half.conj() * partner, axis=(1, 2))
    return np.abs(ov) ** 2


def haar_rms_overlap(n: int, samples: int, rng=None, op: str = "x") -> OverlapEstimate:
    """Monte Carlo mean of ``|<psi|P psi>|**2`` against the exact ``1/(N+1)``."""
    if not 1 <= n <= MAX_OVERLAP_QUBITS:
        raise OutOfRange(f"n={n} outside [1, {MAX_OVERLAP_QUBITS}]")
    if samples < 100:
        raise OutOfRange("need at least 100 samples")
    vals = haar_overlaps(n, samples, rng, op)
    exact = float(haar_mean_square_overlap(2**n))
    return OverlapEstimate(float(vals.mean()), exact, float(vals.std(ddof=1) / np.sqrt(samples)))
