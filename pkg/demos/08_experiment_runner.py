"""Running registered experiments programmatically and from the command line."""

# %%
from __future__ import annotations

import subprocess
import sys

from qxsim import experiments
from qxsim.experiments import ExperimentConfig

print(experiments.summarize())

# %% [markdown]
# Tables are deterministic for a given seed and parameter set, independent
# of the QXSIM_THREADS worker count.

# %%
table = experiments.run_experiment(ExperimentConfig("haar-overlap", {"samples": "2000"}, seed=7))
print(experiments.to_csv(table))

# %%
cmd = [sys.executable, "-m", "qxsim.cli", "ambiguity", "--format", "json"]
print(subprocess.run(cmd, capture_output=True, text=True, check=True).stdout)
