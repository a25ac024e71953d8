"""Postselecting onto one fixed random state, and using it to postselect a qubit onto |0>."""

# %% [markdown]
# Projecting half of sum_x |x>|x> onto psi leaves the complex conjugate of
# psi on the other half.

# %%
from __future__ import annotations

import numpy as np

from qxsim import genpost
from qxsim.genpost import GenericPostselector
from qxsim.qcore import KET_PLUS, PureState

g = GenericPostselector(PureState([2**-0.5, 1j * 2**-0.5]))
print("naive copy", np.round(genpost.extract_copy(g).amps, 4))
print("exact copy", np.round(genpost.extract_copy(g, exact=True).amps, 4))

# %% [markdown]
# A controlled SWAP between psi' = X psi and psi, followed by projecting onto
# psi, leaves the |1> branch with amplitude scaled by |<psi|X psi>|.

# %%
rng = np.random.default_rng(4)
g = GenericPostselector.haar(6, rng)
res = genpost.gadget_postselect_zero(g, PureState(KET_PLUS))
print(f"residual {res.residual:.4f}, direct overlap {abs(res.overlap):.4f}")

# %% [markdown]
# For Haar-random psi that overlap has mean square exactly 1/(N+1).

# %%
est = genpost.haar_rms_overlap(4, 10_000, rng)
print(f"n=4: Monte Carlo {est.mc:.5f}, exact {est.exact:.5f}, z {est.z:+.2f}")
