"""Unstructured-search instances with query accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfRange


@dataclass
class SearchInstance:
    """A list of ``N = 2**n`` items with zero or one marked item.

    Every oracle call, whether on an explicit state vector or through the
    closed-form uniform-superposition query, increments ``queries``.
    """

    n: int
    marked: frozenset[int] = frozenset()
    queries: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        self.marked = frozenset(int(x) for x in self.marked)
        if self.n < 1:
            raise OutOfRange("n must be at least 1")
        if len(self.marked) > 1:
            raise OutOfRange("at most one marked item is supported")
        if any(not 0 <= x < self.N for x in self.marked):
            raise OutOfRange(f"marked item outside range(0, {self.N})")

    @classmethod
    def random(cls, n: int, s: int, rng: np.random.Generator) -> SearchInstance:
        marked = frozenset([int(rng.integers(2**n))]) if s else frozenset()
        return cls(n, marked)

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def solutions(self) -> int:
        return len(self.marked)

    def f(self, y: int) -> int:
        return int(y in self.marked)

    def phase_oracle(self, amps: np.ndarray) -> np.ndarray:
        """Apply ``1 - 2|x><x|`` to an N-dimensional amplitude vector."""
        self.queries += 1
        out = np.array(amps, dtype=complex, copy=True)
        for x in self.marked:
            out[x] = -out[x]
        return out

    def bitflip_oracle(self, amps: np.ndarray) -> np.ndarray:
        """Apply ``|y>|z> -> |y>|z xor f(y)>`` to a 2N-dimensional vector (target last)."""
        self.queries += 1
        out = np.array(amps, dtype=complex, copy=True).reshape(self.N, 2)
        for x in self.marked:
            out[x] = out[x, ::-1].copy()
        return out.ravel()

    def uniform_bitflip_query(self) -> tuple[int, int]:
        """One bit-flip query on ``N**-1/2 sum_y |y>|0>`` in closed form.

        The output is ``N**-1/2 (sum_{f(y)=0} |y>|0> + sum_{f(y)=1} |y>|1>)``;
        it is returned as the multiplicities of the two target branches, each
        basis term carrying amplitude ``N**-1/2``.
        """
        self.queries += 1
        s = len(self.marked)
        return self.N - s, s
