"""Generic nonlinear maps: magnification estimate, state separation and decomposition ambiguity."""

# %% [markdown]
# The magnification r of a pure-state map is its largest local stretch of
# angles.  For the normalized action of diag(1, kappa) it equals kappa.

# %%
from __future__ import annotations

import math

import numpy as np

from qxsim import nonlinear
from qxsim.nonlinear import NonlinearMap
from qxsim.qcore import PureState

for kappa in (1.1, 1.5, 2.0):
    mag = nonlinear.estimate_magnification(NonlinearMap.from_matrix(np.diag([1.0, kappa])), rng=5)
    print(f"kappa={kappa}: r = {mag.r:.6f}")

# %% [markdown]
# Rotating two close states onto the magnifying segment before each step
# grows their distance by about r per step.

# %%
S = NonlinearMap.from_matrix(np.diag([1.0, 2.0]))
a = PureState([1.0, 0.0])
b = PureState([math.cos(2.0**-20), math.sin(2.0**-20)])
res = nonlinear.nonlinear_amplify(S, a, b, 0.3, rng=6)
print(f"{res.iterations} iterations, distances {res.distances[0]:.2e} -> {res.distances[-1]:.3f}")

# %% [markdown]
# A nonlinear rule applied term by term depends on how an entangled state
# is written down.

# %%
demo = nonlinear.schmidt_ambiguity_demo()
print(np.round(demo.computational.amps, 4), np.round(demo.hadamard.amps, 4), round(demo.distance, 6))
