"""Hybrid-argument bookkeeping for Grover search, with and without a non-unitary step."""

# %% [markdown]
# Running Grover on 16 items for three queries and comparing each marked
# run with the oracle-free run gives the sums C_k and D_k.  For unitary
# programs D_k grows at most like 4k^2, which is the query lower bound.

# %%
from __future__ import annotations

import numpy as np

from qxsim import fsp
from qxsim.fsp import NonUnitaryMap

psi0, prog = fsp.grover_program(16, 3)
rep = fsp.hybrid_quantities(fsp.run_program(psi0, prog))
print("success probability", round(rep.success_probability, 4))
print("D_k", np.round(rep.D, 3), " bound 4k^2", [4 * k * k for k in range(4)])
print("R_k", rep.R, " all checks pass", rep.all_checks_pass)

# %% [markdown]
# Appending a non-unitary map gives a positive R_k: the map moves the
# marked runs away from the free run beyond what the queries did.

# %%
prog_nu = prog + [NonUnitaryMap(np.kron(np.diag([1.0, 2.0]), np.eye(8)))]
rep = fsp.hybrid_quantities(fsp.run_program(psi0, prog_nu))
print("R_k with a final non-unitary map", np.round(rep.R, 4))
