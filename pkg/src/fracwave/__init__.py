"""Pseudospectral tools for the mixed fractional NLS

    i psi_t - (-Delta)^s1 psi - (-Delta)^s2 psi = -|psi|^(p-2) psi

on a periodic box: ground states, split-step dynamics, blow-up diagnostics.
"""

__version__ = "0.1.0"

from .errors import FracwaveError  # noqa: E402
from .grid import Field, GridSpec  # noqa: E402
from .functionals import ModelParams  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND", "Field", "FracwaveError", "GridSpec", "ModelParams"]
