"""Small dense Hilbert-space toolkit.

Pure states, density matrices, ensembles, measurement, partial trace, SVD,
Haar sampling and distances.  Everything is a dense complex numpy array;
registers are capped at 12 qubits (pure) and 6 qubits (mixed).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadBasis,
    BadSubsystem,
    DimMismatch,
    DimTooLarge,
    NotNormalized,
    ZeroVector,
)

ZERO_THRESHOLD = 1e-12
INVARIANT_TOL = 1e-10
MAX_PURE_DIM = 2**12
MAX_MIXED_DIM = 2**6


def as_rng(rng: np.random.Generator | int | None = None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for trial ``index`` under master ``seed``.

    The stream depends only on ``(seed, index)``, so trials can run in any
    order or on any worker and still draw identical numbers.
    """
    key = np.random.SeedSequence([int(seed), int(index)]).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _dims_tuple(dims: Iterable[int] | int) -> tuple[int, ...]:
    if isinstance(dims, (int, np.integer)):
        return (int(dims),)
    return tuple(int(d) for d in dims)


def qubit_dims(n: int) -> tuple[int, ...]:
    return (2,) * n


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over a register with subsystem ``dims``."""

    amps: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amps, dims: Iterable[int] | int | None = None) -> None:
        amps = _readonly(np.ravel(amps))
        dims = (amps.size,) if dims is None else _dims_tuple(dims)
        if int(np.prod(dims)) != amps.size:
            raise DimMismatch(f"dims {dims} do not match length {amps.size}")
        if amps.size > MAX_PURE_DIM:
            raise DimTooLarge(f"pure state dimension {amps.size} exceeds {MAX_PURE_DIM}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > INVARIANT_TOL:
            raise NotNormalized(f"state norm {norm!r} is not 1")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def overlap(self, other: PureState) -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: PureState) -> float:
        return float(abs(np.vdot(self.amps, other.amps)) ** 2)

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amps, self.amps.conj()), self.dims)

    def conj(self) -> PureState:
        return PureState(self.amps.conj(), self.dims)

    def __repr__(self) -> str:
        return f"PureState(dims={self.dims}, amps={np.array2string(self.amps, precision=4)})"


def normalize(v, dims: Iterable[int] | int | None = None) -> PureState:
    v = np.asarray(v, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm <= ZERO_THRESHOLD:
        raise ZeroVector(f"cannot normalize vector of norm {norm:.3e}")
    return PureState(v / norm, dims)


def basis_state(index: int, dims: Iterable[int] | int) -> PureState:
    dims = _dims_tuple(dims)
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[index] = 1.0
    return PureState(v, dims)


def tensor(*states: PureState) -> PureState:
    amps = reduce(np.kron, (s.amps for s in states))
    dims = sum((s.dims for s in states), ())
    return PureState(amps, dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    mat: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, mat, dims: Iterable[int] | int | None = None, *, check: bool = True) -> None:
        mat = _readonly(mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimMismatch(f"density matrix must be square, got {mat.shape}")
        dims = (mat.shape[0],) if dims is None else _dims_tuple(dims)
        if int(np.prod(dims)) != mat.shape[0]:
            raise DimMismatch(f"dims {dims} do not match size {mat.shape[0]}")
        if mat.shape[0] > MAX_MIXED_DIM:
            raise DimTooLarge(f"density matrix dimension {mat.shape[0]} exceeds {MAX_MIXED_DIM}")
        if check:
            if np.max(np.abs(mat - mat.conj().T)) > INVARIANT_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(mat) - 1.0) > INVARIANT_TOL:
                raise NotNormalized(f"density matrix trace {np.trace(mat)!r} is not 1")
            if np.linalg.eigvalsh(mat).min() < -INVARIANT_TOL:
                raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.mat)).copy()

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims}, mat=\n{np.array2string(self.mat, precision=4)})"


def to_density(x: PureState | DensityMatrix) -> DensityMatrix:
    return x.density() if isinstance(x, PureState) else x


@dataclass(frozen=True)
class PureEnsemble:
    """Classical mixture of pure states, kept as explicit branches.

    Under nonlinear dynamics a density matrix no longer determines the
    outcome of later operations, so measurement branches are carried
    separately until every nonlinear step has been applied.
    """

    members: tuple[tuple[float, PureState], ...]

    def __post_init__(self) -> None:
        total = sum(p for p, _ in self.members)
        if abs(total - 1.0) > INVARIANT_TOL:
            raise NotNormalized(f"ensemble probabilities sum to {total!r}")
        if any(p < 0 or p > 1 + INVARIANT_TOL for p, _ in self.members):
            raise ValueError("ensemble probabilities must lie in [0, 1]")

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    def map(self, fn) -> PureEnsemble:
        return PureEnsemble(tuple((p, fn(s)) for p, s in self.members))

    def density(self) -> DensityMatrix:
        mat = sum(p * np.outer(s.amps, s.amps.conj()) for p, s in self.members)
        return DensityMatrix(mat, self.members[0][1].dims)

    def sample(self, rng=None) -> PureState:
        idx = sample_index(self.probs, as_rng(rng))
        return self.members[idx][1]


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw in ascending index order."""
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    # guard the u == cdf[-1] edge and trailing zero-probability outcomes
    last = int(np.flatnonzero(probs > 0)[-1])
    return min(idx, last)


def _check_subsystems(dims: tuple[int, ...], subsystems: Sequence[int]) -> tuple[int, ...]:
    subsystems = tuple(int(i) for i in subsystems)
    for i in subsystems:
        if i < 0 or i >= len(dims):
            raise BadSubsystem(f"subsystem {i} out of range for dims {dims}")
    if len(set(subsystems)) != len(subsystems):
        raise BadSubsystem(f"repeated subsystem in {subsystems}")
    return subsystems


def apply_operator(state: PureState | np.ndarray, op: np.ndarray, targets: Sequence[int],
                   dims: Sequence[int] | None = None) -> np.ndarray:
    """Apply ``op`` to subsystems ``targets``; returns the raw (unnormalized) amplitudes."""
    if isinstance(state, PureState):
        amps, dims = state.amps, state.dims
    else:
        amps = np.asarray(state, dtype=complex)
        dims = tuple(dims) if dims is not None else (amps.size,)
    targets = _check_subsystems(tuple(dims), targets)
    tdim = int(np.prod([dims[t] for t in targets]))
    op = np.asarray(op, dtype=complex)
    if op.shape != (tdim, tdim):
        raise DimMismatch(f"operator shape {op.shape} does not act on dimension {tdim}")
    psi = amps.reshape(dims)
    rest = [i for i in range(len(dims)) if i not in targets]
    psi = np.transpose(psi, list(targets) + rest).reshape(tdim, -1)
    psi = op @ psi
    psi = psi.reshape([dims[t] for t in targets] + [dims[r] for r in rest])
    inverse = np.argsort(list(targets) + rest)
    return np.transpose(psi, inverse).ravel()


def reduced_density(state: PureState, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state of ``keep`` (in ascending subsystem order) from a pure state."""
    keep = sorted(_check_subsystems(state.dims, keep))
    rest = [i for i in range(state.n_subsystems) if i not in keep]
    kdim = int(np.prod([state.dims[k] for k in keep]))
    psi = np.transpose(state.amps.reshape(state.dims), keep + rest).reshape(kdim, -1)
    return DensityMatrix(psi @ psi.conj().T, [state.dims[k] for k in keep])


def partial_trace(rho: DensityMatrix | PureState, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every subsystem not in ``keep``; kept subsystems stay in ascending order."""
    if isinstance(rho, PureState):
        return reduced_density(rho, keep)
    dims = rho.dims
    keep = sorted(_check_subsystems(dims, keep))
    n = len(dims)
    t = rho.mat.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    kdim = int(np.prod([dims[k] for k in keep]))
    mat = np.einsum("".join(row) + "".join(col) + "->" + out, t).reshape(kdim, kdim)
    return DensityMatrix(mat, [dims[k] for k in keep])


@dataclass(frozen=True, eq=False)
class SvdData:
    """Singular values (descending) with left/right singular vectors as columns."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def condition_number(self) -> float:
        smin = self.singular_values[-1]
        return float("inf") if smin == 0 else float(self.singular_values[0] / smin)

    @property
    def lambda_min(self) -> float:
        return float(self.singular_values[-1])

    @property
    def lambda_max(self) -> float:
        return float(self.singular_values[0])

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.conj().T


def svd(m) -> SvdData:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    u, s, vh = np.linalg.svd(m)
    return SvdData(s, u, vh.conj().T)


def haar_state(n_qubits: int, rng=None) -> PureState:
    """Haar-random pure state on ``n_qubits`` qubits."""
    if n_qubits > 12:
        raise DimTooLarge(f"haar_state supports at most 12 qubits, got {n_qubits}")
    if n_qubits < 1:
        raise ValueError("n_qubits must be at least 1")
    rng = as_rng(rng)
    dim = 2**n_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(z / np.linalg.norm(z), qubit_dims(n_qubits))


def haar_unitary(dim: int, rng=None) -> np.ndarray:
    rng = as_rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def trace_distance(a: DensityMatrix | PureState, b: DensityMatrix | PureState) -> float:
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.dim != b.dim:
            raise DimMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
        return float(np.sqrt(max(0.0, 1.0 - a.fidelity(b))))
    a, b = to_density(a), to_density(b)
    if a.dim != b.dim:
        raise DimMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    ev = np.linalg.eigvalsh(a.mat - b.mat)
    return float(min(1.0, 0.5 * np.sum(np.abs(ev))))


def fs_angle(a: PureState | np.ndarray, b: PureState | np.ndarray) -> float:
    """Fubini-Study angle arccos|<a|b>|, computed stably for nearby states."""
    a = a.amps if isinstance(a, PureState) else np.asarray(a, dtype=complex)
    b = b.amps if isinstance(b, PureState) else np.asarray(b, dtype=complex)
    ov = np.vdot(a, b)
    perp = b - a * ov
    return float(np.arctan2(np.linalg.norm(perp), abs(ov)))


def _basis_matrix(basis, dim: int) -> np.ndarray:
    b = np.asarray([np.ravel(v.amps if isinstance(v, PureState) else v) for v in basis], dtype=complex)
    if b.shape != (dim, dim):
        raise BadBasis(f"basis must contain {dim} vectors of length {dim}, got shape {b.shape}")
    if np.max(np.abs(b.conj() @ b.T - np.eye(dim))) > 1e-9:
        raise BadBasis("basis vectors are not orthonormal")
    return b


def computational_basis(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def measurement_ensemble(state: PureState, basis, subsystems: Sequence[int] | None = None,
                         ) -> tuple[np.ndarray, list[PureState | None]]:
    """Outcome probabilities and renormalized post-measurement branches.

    Branches with zero probability are returned as ``None``.
    """
    subsystems = tuple(range(state.n_subsystems)) if subsystems is None else tuple(subsystems)
    subsystems = _check_subsystems(state.dims, subsystems)
    sdim = int(np.prod([state.dims[i] for i in subsystems]))
    b = _basis_matrix(basis, sdim)
    probs = np.empty(sdim)
    branches: list[PureState | None] = []
    for i in range(sdim):
        proj = np.outer(b[i], b[i].conj())
        v = apply_operator(state, proj, subsystems)
        p = float(np.vdot(v, v).real)
        probs[i] = p
        branches.append(PureState(v / np.sqrt(p), state.dims) if p > ZERO_THRESHOLD**2 else None)
    return probs, branches


def measure_ensemble(state: PureState, basis, subsystems: Sequence[int] | None = None) -> PureEnsemble:
    probs, branches = measurement_ensemble(state, basis, subsystems)
    keep = [(float(p), s) for p, s in zip(probs, branches) if s is not None]
    total = sum(p for p, _ in keep)
    return PureEnsemble(tuple((p / total, s) for p, s in keep))


def measure(state: PureState, basis, rng=None, subsystems: Sequence[int] | None = None,
            ) -> tuple[int, PureState]:
    """Born-rule measurement of ``subsystems`` (default: all) in ``basis``.

    ``basis`` is a sequence of orthonormal vectors (rows) spanning the
    measured subsystem.  Returns the outcome index and the renormalized
    post-measurement state.
    """
    probs, branches = measurement_ensemble(state, basis, subsystems)
    idx = sample_index(probs, as_rng(rng))
    return idx, branches[idx]


# -- common gates ----------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def epr_pair() -> PureState:
    return PureState(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))


def complete_unitary(columns: np.ndarray) -> np.ndarray:
    """Extend orthonormal ``columns`` (d x k) to a d x d unitary, keeping them first."""
    columns = np.asarray(columns, dtype=complex)
    d, k = columns.shape
    # QR of [columns | I] keeps span(columns) as the leading block
    q, r = np.linalg.qr(np.hstack([columns, np.eye(d, dtype=complex)]))
    q = q[:, :d]
    phases = np.diag(r)[:k]
    q[:, :k] = q[:, :k] * (phases / np.abs(phases))
    return q
