"""Binary asymmetric channels: closed-form capacity, its numeric check, and the TVD bound."""

# %% [markdown]
# A bit channel flips input 0 with probability eps0 and input 1 with
# probability eps1.  Its capacity has a closed form; a golden-section search
# over the input prior gives the same number independently.

# %%
from __future__ import annotations

import math

import numpy as np

from qxsim import channels
from qxsim.channels import BinaryChannel

for e0, e1 in [(0.5, 0.5), (0.0, 0.0), (0.5, 0.2), (0.1, 0.3)]:
    ch = BinaryChannel(e0, e1)
    print(f"eps=({e0}, {e1})  closed {channels.capacity_closed_form(ch):.6f}"
          f"  optimized {channels.capacity_optimized(ch):.6f}")

# %% [markdown]
# Near eps0 = eps1 = 1/2 the capacity is quadratic in the deviation D.  The
# measured coefficient is 1/(2 ln 2) when only one flip probability moves.

# %%
for D in (1e-2, 1e-3, 1e-4):
    c = channels.capacity_closed_form(BinaryChannel(0.5, 0.5 - D))
    print(f"D={D:g}  C/D^2 = {c / D**2:.5f}   1/(2 ln 2) = {1 / (2 * math.log(2)):.5f}")

# %% [markdown]
# Any channel whose two output distributions are within total variation
# distance d carries at most d - d log2 d bits.

# %%
worst = 0.0
for e1 in np.linspace(0.5 - 1 / math.e, 0.5, 200, endpoint=False):
    ch = BinaryChannel(0.5, float(e1))
    d = channels.channel_tvd(ch)
    worst = max(worst, channels.capacity_closed_form(ch) / channels.tvd_capacity_bound(d))
print(f"largest capacity / TVD bound on the sweep: {worst:.4f}")
