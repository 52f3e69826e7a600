"""Backend selection for the pointwise kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``FRACWAVE_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

_FORCE_PY = os.environ.get("FRACWAVE_PURE_PYTHON", "").strip() not in ("", "0")

_compiled = None
if not _FORCE_PY:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def backends():
    """Available backend modules keyed by name."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def _flat_complex(a):
    return np.ascontiguousarray(a, dtype=np.complex128).reshape(-1)


def nonlinear_phase(psi, dt, p):
    """psi * exp(i dt |psi|^(p-2)), pointwise."""
    out = _impl.nonlinear_phase(_flat_complex(psi), float(dt), float(p))
    return np.asarray(out).reshape(np.shape(psi))


def abs_power_sum(u, p):
    """sum |u|^p over all points (no cell volume)."""
    return float(_impl.abs_power_sum(_flat_complex(u), float(p)))


def power_nonlinearity(u, p):
    """|u|^(p-2) u for real u."""
    flat = np.ascontiguousarray(u, dtype=np.float64).reshape(-1)
    return np.asarray(_impl.power_nonlinearity(flat, float(p))).reshape(np.shape(u))


def max_abs(u):
    return float(_impl.max_abs(_flat_complex(u)))
