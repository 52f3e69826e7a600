"""Periodic grids, fields and Fourier-multiplier operators.

The whole space is replaced by the torus [-L/2, L/2)^N sampled on n points
per axis. Transforms follow the numpy convention (unnormalized forward FFT),
so quadratures carry the cell volume (L/n)^N and spectral sums carry the
extra factor 1/n^N.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.signal import czt

from . import kernels
from .errors import GridMismatch, ParameterError

MAX_POINTS = 1 << 24
EDGE_TOL = 1e-10
FRW_MAGIC = b"FRW1"
_FRW_HEADER = struct.Struct("<4sIId")


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise ParameterError(f"n_per_axis must be a power of two >= 16, got {self.n}")
        if not self.length > 0:
            raise ParameterError(f"box_length must be positive, got {self.length}")
        if n**self.dim > MAX_POINTS:
            raise ParameterError(
                f"{n}^{self.dim} points exceeds the memory budget of {MAX_POINTS}"
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def npoints(self):
        return self.n**self.dim

    @property
    def dx(self):
        return self.length / self.n

    @property
    def cell_volume(self):
        return self.dx**self.dim

    def axis(self):
        return _axis(self)

    def coords(self):
        """Coordinate arrays, one per axis, broadcast to the full grid."""
        return _coords(self)

    def radius(self):
        return _radius(self)

    def wavenumbers(self):
        """Angular frequencies 2*pi*k/L in FFT order, k in [-n/2, n/2)."""
        return _wavenumbers(self)

    def kvectors(self):
        return _kvectors(self)

    def kabs2(self):
        """|xi|^2 on the full spectral grid."""
        return _kabs2(self)

    def to_dict(self):
        return {"dim": self.dim, "n_per_axis": self.n, "box_length": self.length}


def _readonly(a):
    a.flags.writeable = False
    return a


@lru_cache(maxsize=16)
def _axis(grid):
    return _readonly(-0.5 * grid.length + grid.dx * np.arange(grid.n))


@lru_cache(maxsize=16)
def _coords(grid):
    ax = _axis(grid)
    return tuple(_readonly(c) for c in np.meshgrid(*([ax] * grid.dim), indexing="ij"))


@lru_cache(maxsize=16)
def _radius(grid):
    return _readonly(np.sqrt(sum(c**2 for c in _coords(grid))))


@lru_cache(maxsize=16)
def _wavenumbers(grid):
    return _readonly(2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx))


@lru_cache(maxsize=16)
def _kvectors(grid):
    k = _wavenumbers(grid)
    return tuple(_readonly(c) for c in np.meshgrid(*([k] * grid.dim), indexing="ij"))


@lru_cache(maxsize=16)
def _kabs2(grid):
    return _readonly(sum(c**2 for c in _kvectors(grid)))


def fft(values):
    return sfft.fftn(values)


def ifft(values):
    return sfft.ifftn(values)


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable complex grid function.

    ``values`` may be given flat (length n^dim, row-major) or shaped.
    ``notes`` carries flags such as ``"boundary-decay"`` set by operations
    whose preconditions were only approximately met.
    """

    grid: GridSpec
    values: np.ndarray
    notes: tuple = dc_field(default=())

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.size != self.grid.npoints:
            raise GridMismatch(
                f"{v.size} values do not fit a grid of {self.grid.npoints} points"
            )
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(*grid.coords()))

    @classmethod
    def from_hat(cls, grid, uhat):
        return cls(grid, ifft(uhat))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    def hat(self):
        return fft(self.values)

    @property
    def real(self):
        return np.real(self.values)

    def conj(self):
        return Field(self.grid, np.conj(self.values))

    def with_notes(self, *notes):
        return Field(self.grid, self.values, tuple(self.notes) + tuple(notes))

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(grid={self.grid}, mass={mass(self):.6g})"


@dataclass(frozen=True, eq=False)
class SpectralMultiplier:
    grid: GridSpec
    symbol: np.ndarray

    def __post_init__(self):
        sym = np.asarray(self.symbol, dtype=np.float64)
        if sym.shape != self.grid.shape:
            raise GridMismatch("symbol shape does not match grid")
        if not sym.flags.writeable:
            object.__setattr__(self, "symbol", sym)
        else:
            object.__setattr__(self, "symbol", _readonly(sym.copy()))


def _check_s(s):
    if not 0.0 < s <= 1.0:
        raise ParameterError(f"fractional order s must lie in (0, 1], got {s}")


@lru_cache(maxsize=64)
def fractional_symbol_array(grid, s):
    """|xi|^(2s) as a read-only array (cached per grid and order)."""
    _check_s(s)
    k2 = _kabs2(grid)
    if s == 1.0:
        sym = k2.copy()
    else:
        sym = k2**s
    return _readonly(sym)


def build_fractional_symbol(grid, s):
    return SpectralMultiplier(grid, fractional_symbol_array(grid, float(s)))


def apply_multiplier(u, m):
    if u.grid != m.grid:
        raise GridMismatch("field and multiplier live on different grids")
    return Field.from_hat(u.grid, m.symbol * u.hat())


def fractional_laplacian(u, s):
    """(-Delta)^s u."""
    return apply_multiplier(u, build_fractional_symbol(u.grid, s))


def spectral_sum(grid, uhat, weight=None):
    """Parseval-normalized sum of weight*|uhat|^2."""
    w = np.abs(uhat) ** 2
    if weight is not None:
        w = weight * w
    return float(np.sum(w)) * grid.cell_volume / grid.npoints


def mass(u):
    return float(np.sum(np.abs(u.values) ** 2)) * u.grid.cell_volume


def mass_spectral(u):
    return spectral_sum(u.grid, u.hat())


def seminorm_sq(u, s, uhat=None):
    """||(-Delta)^(s/2) u||_2^2 computed on the Fourier side."""
    if uhat is None:
        uhat = u.hat()
    return spectral_sum(u.grid, uhat, fractional_symbol_array(u.grid, float(s)))


def norm_lp(u, p):
    if p < 1:
        raise ParameterError(f"Lp norm needs p >= 1, got {p}")
    return (kernels.abs_power_sum(u.values, p) * u.grid.cell_volume) ** (1.0 / p)


def inner(u, v):
    """<u, v> = integral of conj(u) v."""
    u._check(v)
    return complex(np.vdot(u.values, v.values)) * u.grid.cell_volume


def gradient(u):
    """Spectral gradient, one complex array per axis."""
    uhat = u.hat()
    return tuple(ifft(1j * k * uhat) for k in u.grid.kvectors())


def edge_max(u):
    """max |u| on the box faces relative to max |u| over the box."""
    a = np.abs(u.values)
    top = a.max()
    if top == 0:
        return 0.0
    faces = [np.take(a, 0, axis=ax).max() for ax in range(u.grid.dim)]
    return float(max(faces) / top)


def boundary_mass(u, fraction=0.1):
    """Fraction of the mass carried by the outer shell max|x_i| > (1-fraction)L/2."""
    total = mass(u)
    if total == 0:
        return 0.0
    half = 0.5 * u.grid.length * (1.0 - fraction)
    outer = np.zeros(u.grid.shape, dtype=bool)
    for c in u.grid.coords():
        outer |= np.abs(c) > half
    return float(np.sum(np.abs(u.values[outer]) ** 2) * u.grid.cell_volume / total)


def _stretch_axis(coef, grid, t, axis):
    """Evaluate the trigonometric interpolant along one axis at t*x_j.

    ``coef`` holds FFT coefficients along ``axis``. The sum over
    k = -n/2..n/2 (Nyquist split in halves) at the points t*x_j is a
    chirp-z transform.
    """
    n = grid.n
    c = np.fft.fftshift(coef, axes=axis)  # k = -n/2 .. n/2-1
    nyq = np.take(c, [0], axis=axis)
    c = np.concatenate([0.5 * nyq, np.delete(c, 0, axis=axis), 0.5 * nyq], axis=axis)
    k = np.arange(-n // 2, n // 2 + 1)
    shape = [1] * c.ndim
    shape[axis] = n + 1
    c = c * np.exp(1j * np.pi * k * (1.0 - t)).reshape(shape)
    out = czt(c, m=n, w=np.exp(2j * np.pi * t / n), a=1.0, axis=axis)
    j = np.arange(n)
    shape[axis] = n
    out = out * np.exp(-1j * np.pi * j * t).reshape(shape) / n
    x = grid.axis()
    outside = np.abs(t * x) > 0.5 * grid.length
    if outside.any():
        idx = [slice(None)] * c.ndim
        idx[axis] = outside
        out[tuple(idx)] = 0.0
    return out


def dilate(u, t):
    """u_t(x) = t^(N/2) u(t x) by band-limited interpolation.

    Points with |t x| beyond the box read zero. If the input does not decay
    to EDGE_TOL at the boundary the result carries the note "boundary-decay".
    """
    if not t > 0:
        raise ParameterError(f"dilation factor must be positive, got {t}")
    if t == 1.0:
        return Field(u.grid, u.values, u.notes)
    # each pass turns one axis from coefficients into stretched samples
    vals = u.hat()
    for ax in range(u.grid.dim):
        vals = _stretch_axis(vals, u.grid, t, ax)
    out = Field(u.grid, t ** (0.5 * u.grid.dim) * vals)
    if edge_max(u) > EDGE_TOL:
        out = out.with_notes("boundary-decay")
    return out


def save_field(path, u):
    """Write a .frw snapshot: header then interleaved (re, im) float64."""
    header = _FRW_HEADER.pack(FRW_MAGIC, u.grid.dim, u.grid.n, u.grid.length)
    body = np.empty(2 * u.grid.npoints, dtype="<f8")
    flat = u.values.reshape(-1)
    body[0::2] = flat.real
    body[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _FRW_HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, n, length = _FRW_HEADER.unpack_from(raw)
    if magic != FRW_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    grid = GridSpec(dim, n, length)
    body = np.frombuffer(raw, dtype="<f8", offset=_FRW_HEADER.size)
    if body.size != 2 * grid.npoints:
        raise ValueError(f"{path}: expected {2 * grid.npoints} floats, found {body.size}")
    return Field(grid, body[0::2] + 1j * body[1::2])
