"""Small-instance simulations of nonlinear and postselected quantum dynamics.

Submodules: ``qcore`` (states, measurement, SVD), ``channels`` (binary
channel capacity), ``fsp`` (non-unitary maps with renormalization), ``born``
(modified Born rule), ``nonlinear`` (cloning and generic nonlinear maps),
``genpost`` (postselection onto a generic state) and ``experiments`` (the
registry behind the ``qxsim`` command).
"""

from .experiments import VERSION as __version__

__all__ = ["__version__"]
