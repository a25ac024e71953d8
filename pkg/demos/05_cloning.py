"""A single-qubit cloner: its CNOT map, single-query search and signaling."""

# %% [markdown]
# Cloning, then a CNOT between original and copy, then discarding the copy
# is a quadratic map on density matrices.  Its fixed points are the
# diagonal states and |+><+|; nearby states run away from |+><+|.

# %%
from __future__ import annotations

import numpy as np

from qxsim import nonlinear
from qxsim.qcore import DensityMatrix
from qxsim.search import SearchInstance

rho = nonlinear.rho_eps(0.1)
print(np.round(nonlinear.cnot_clone_map(rho).real, 4))
print(np.round(nonlinear.cnot_clone_gadget(DensityMatrix(rho)).real, 4))

eps = 2.0**-10
for _ in range(12):
    eps = 2 * eps - 2 * eps * eps
print(f"eps after 12 steps from 2^-10: {eps:.4f}")

# %% [markdown]
# After one query the flag qubit is exactly |+><+| when nothing is marked,
# and 2^-n away otherwise.  About n iterations expose the difference.

# %%
rng = np.random.default_rng(3)
for s in (0, 1):
    out = nonlinear.clone_search(SearchInstance.random(20, s, rng), rng)
    print(f"n=20, s={s}: decided {out.solutions} after {out.iterations} iterations")

# %% [markdown]
# Bob clones his half of an EPR pair k-1 times.  All k readings agree with
# probability 2^(1-k) if Alice left her half alone, and always if she measured.

# %%
for k in (3, 5, 8):
    idle, used = nonlinear.clone_signal_frequencies(k, 10_000, rng)
    print(f"k={k}: all-equal {idle:.4f} (expect {2.0 ** (1 - k):.4f}) vs {used}")
