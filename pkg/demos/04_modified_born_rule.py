"""Measurement with probabilities |alpha|^(2+delta): postselection, teleportation, search, bounds."""

# %%
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from qxsim import born
from qxsim.born import BornModel, WeightedBranches
from qxsim.qcore import PureState
from qxsim.search import SearchInstance

print(born.born_probabilities([math.sqrt(1 / 3), math.sqrt(2 / 3)], BornModel(2.0)))

# %% [markdown]
# Spreading one branch over k ancillas in |+> scales its outcome mass by
# 2^(-k|delta|/2), which acts like postselecting the other branch.

# %%
amp = 2**-0.5
branches = WeightedBranches([(0, 0, amp, 1), (1, 1, amp, 1)], 2)
for k in (4, 10, 20):
    res = born.simulate_postselect(branches, BornModel(1.0), k)
    print(f"k={k}: leakage {res.leakage:.3e}")

# %% [markdown]
# Forcing Alice's Bell outcome this way sends a qubit to Bob without any
# classical message.

# %%
rng = np.random.default_rng(2)
fids = [born.teleport_signal(BornModel(1.0), 8, rng=rng).fidelity for _ in range(100)]
print(f"teleport fidelity min {min(fids):.5f} (1 - 2^-8 = {1 - 2**-8:.5f})")

# %% [markdown]
# The same trick finds a marked item with one query.  The ancilla count
# grows like 1/|delta|.

# %%
for d in (0.5, 0.25):
    out = born.born_search(SearchInstance.random(10, 1, rng), BornModel(d), rng)
    print(f"delta={d}: decided {out.solutions} with k={out.k}, {out.queries} query")
print("delta lower bound from search at Q = sqrt(N)/24, m = 3:",
      born.delta_bound_from_search(Fraction(32, 24), 2**10, 3))

# %% [markdown]
# Only power laws give scale-invariant, product-respecting probabilities.

# %%
print(born.scale_invariance_check(lambda a: np.abs(a) ** 3, rng=0).passed)
res = born.scale_invariance_check(lambda a: np.abs(a) ** 2 + np.abs(a) ** 4, rng=0)
print(res.passed, res.witness.kind, res.witness.other)
