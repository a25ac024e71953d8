"""Binary asymmetric channels, total variation distance and entropy bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NotNormalized, OutOfRegime

INV_E = 1.0 / math.e
GOLDEN_ITERATIONS = 200


@dataclass(frozen=True)
class BinaryChannel:
    """Bit channel; ``eps0``/``eps1`` are the flip probabilities for inputs 0/1."""

    eps0: float
    eps1: float

    def __post_init__(self) -> None:
        for name in ("eps0", "eps1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} is not a probability")

    def output_distributions(self) -> tuple[np.ndarray, np.ndarray]:
        """Conditional output distributions p(.|0) and p(.|1)."""
        return (np.array([1 - self.eps0, self.eps0]),
                np.array([self.eps1, 1 - self.eps1]))


def xlog2x(p: float) -> float:
    return 0.0 if p <= 0.0 else p * math.log2(p)


def binary_entropy(p: float) -> float:
    return -xlog2x(p) - xlog2x(1.0 - p)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def mutual_information(ch: BinaryChannel, prior1: float) -> float:
    """I(A;B) in bits when input 1 is sent with probability ``prior1``."""
    q1 = (1 - prior1) * ch.eps0 + prior1 * (1 - ch.eps1)
    return (binary_entropy(q1) - (1 - prior1) * binary_entropy(ch.eps0)
            - prior1 * binary_entropy(ch.eps1))


def capacity_closed_form(ch: BinaryChannel) -> float:
    """Capacity of a binary asymmetric channel from the standard closed form.

    With ``L = log2 z = (h(eps1) - h(eps0)) / (1 - eps1 - eps0)`` the capacity is
    ``h(1/(1+z)) - L/(1+z) + eps0*L - h(eps0)``.  ``1/(1+z)`` is evaluated as a
    logistic function of ``L`` so that large ``|L|`` does not overflow.
    """
    e0, e1 = ch.eps0, ch.eps1
    denom = 1.0 - e1 - e0
    if abs(denom) < 1e-12:
        return 0.0
    log_z = (binary_entropy(e1) - binary_entropy(e0)) / denom
    t = log_z * math.log(2.0)
    u = 1.0 / (1.0 + math.exp(t)) if t < 0 else math.exp(-t) / (1.0 + math.exp(-t))
    c = binary_entropy(u) - log_z * u + e0 * log_z - binary_entropy(e0)
    return min(1.0, max(0.0, c))


def golden_section_max(f, lo: float, hi: float, iterations: int = GOLDEN_ITERATIONS) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(argmax, max)``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    best = max((fc, c), (fd, d), (f(lo), lo), (f(hi), hi))
    return best[1], best[0]


def capacity_optimized(ch: BinaryChannel) -> float:
    """Capacity as the maximum of mutual information over the input prior."""
    _, value = golden_section_max(lambda p: mutual_information(ch, p), 0.0, 1.0)
    return max(0.0, value)


def tvd(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"lengths differ: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > 1e-9:
            raise NotNormalized(f"{name} sums to {v.sum()!r}")
    return float(0.5 * np.abs(p - q).sum())


def channel_tvd(ch: BinaryChannel) -> float:
    return tvd(*ch.output_distributions())


def tvd_capacity_bound(delta: float) -> float:
    """Upper bound delta - delta*log2(delta) on capacity at output TVD ``delta``."""
    if not 0.0 < delta <= INV_E:
        raise OutOfRegime(f"delta={delta!r} outside (0, 1/e]")
    return delta - delta * math.log2(delta)


def fannes_bound(T: float, d: int) -> float:
    """Classical Fannes bound on |H(p) - H(q)| for distributions at TVD ``T``."""
    if not 0.0 < T <= INV_E:
        raise OutOfRegime(f"T={T!r} outside (0, 1/e]")
    if d < 2:
        raise OutOfRegime(f"alphabet size d={d} must be at least 2")
    return T * math.log2(d) - T * math.log2(T)
