"""Pure-numpy versions of the pointwise kernels in ``_kernels.pyx``.

All functions take flat contiguous arrays and return new arrays or floats.
"""

import numpy as np


def _amp(r2, half_q):
    if half_q == 1.0:
        return r2
    if half_q == 0.0:
        return np.ones_like(r2)
    return r2**half_q


def nonlinear_phase(psi, dt, p):
    r2 = psi.real**2 + psi.imag**2
    return psi * np.exp(1j * dt * _amp(r2, 0.5 * (p - 2.0)))


def abs_power_sum(u, p):
    r2 = u.real**2 + u.imag**2
    return float(np.sum(_amp(r2, 0.5 * p)))


def power_nonlinearity(u, p):
    return _amp(u * u, 0.5 * (p - 2.0)) * u


def max_abs(u):
    if u.size == 0:
        return 0.0
    return float(np.sqrt(np.max(u.real**2 + u.imag**2)))
