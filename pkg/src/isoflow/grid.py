"""Uniform 1D grids, sampled fields, differentiation and quadrature.

Units are fixed once for the whole package: hbar = 1 and 2m = 1, so the
Schrodinger operator is exactly ``-d^2/dq^2 + V``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np


class GridKind(str, enum.Enum):
    PERIODIC = "periodic"
    BOX = "box"

    @classmethod
    def parse(cls, value: "GridKind | str") -> "GridKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"periodic": cls.PERIODIC, "box": cls.BOX, "boxdirichlet": cls.BOX, "dirichlet": cls.BOX}
        if key not in aliases:
            raise ValueError(f"unknown grid kind {value!r}; expected 'periodic' or 'box'")
        return aliases[key]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-L/2, L/2)`` (periodic) or the open box ``(0, L)``."""

    n: int
    length: float
    kind: GridKind = GridKind.PERIODIC

    def __post_init__(self):
        kind = GridKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"make_grid: n must be an integer >= 8, got {self.n}")
        if kind is GridKind.PERIODIC and self.n % 2:
            raise ValueError(f"make_grid: periodic grids need even n, got {self.n}")
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValueError(f"make_grid: length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def periodic(self) -> bool:
        return self.kind is GridKind.PERIODIC

    @property
    def spacing(self) -> float:
        if self.periodic:
            return self.length / self.n
        return self.length / (self.n + 1)

    @cached_property
    def points(self) -> np.ndarray:
        i = np.arange(self.n)
        if self.periodic:
            q = -0.5 * self.length + i * self.spacing
        else:
            q = (i + 1) * self.spacing
        q.flags.writeable = False
        return q

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order (periodic grids only)."""
        self._require_periodic("wavenumbers")
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        k.flags.writeable = False
        return k

    @property
    def k_max(self) -> float:
        """Largest representable wavenumber, pi / spacing."""
        return math.pi / self.spacing

    def _require_periodic(self, what: str) -> None:
        if not self.periodic:
            raise ValueError(f"{what} requires a periodic grid")


def make_grid(n: int, length: float, kind: GridKind | str = GridKind.PERIODIC) -> Grid:
    return Grid(n, length, GridKind.parse(kind))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a potential on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"field has shape {v.shape}, grid expects ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._coerce(other))

    def __mul__(self, other):
        return Field(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def zeros(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.n))


def sample(grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> Field:
    """Evaluate ``f`` at the grid points. ``f`` must accept an array."""
    values = np.broadcast_to(np.asarray(f(grid.points), dtype=float), (grid.n,))
    if not np.all(np.isfinite(values)):
        raise ValueError("sample: f is not finite at every grid point")
    return Field(grid, values)


def _check_same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


# --- differentiation -------------------------------------------------------


def spectral_multiplier(grid: Grid, order: int) -> np.ndarray:
    """Fourier multiplier (ik)^order in full-FFT ordering.

    The Nyquist mode is zeroed for odd orders so real fields stay real and
    odd-order matrices stay exactly skew-symmetric.
    """
    k = grid.wavenumbers
    mult = (1j * k) ** order
    if order % 2:
        mult[grid.n // 2] = 0.0
    return mult


def _fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for derivative ``order`` at offset 0 (Fornberg)."""
    x = np.asarray(offsets, dtype=float)
    m = len(x)
    c = np.zeros((m, order + 1))
    c1, c4 = 1.0, x[0]
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, order)
        c2 = 1.0
        c5, c4 = c4, x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


# interior half-width and one-sided stencil width per derivative order
_FD_LAYOUT = {1: (2, 5), 2: (2, 6), 3: (3, 7)}


@lru_cache(maxsize=32)
def _box_matrix(grid: Grid, order: int) -> np.ndarray:
    n, h = grid.n, grid.spacing
    half, width = _FD_LAYOUT[order]
    mat = np.zeros((n, n))
    for i in range(n):
        if half <= i < n - half:
            cols = np.arange(i - half, i + half + 1)
        else:
            start = 0 if i < half else n - width
            cols = np.arange(start, start + width)
        mat[i, cols] = _fd_weights(cols - i, order)
    mat /= h**order
    mat.flags.writeable = False
    return mat


@lru_cache(maxsize=32)
def _spectral_matrix(grid: Grid, order: int) -> np.ndarray:
    mult = spectral_multiplier(grid, order)
    mat = np.real(np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(grid.n), axis=0), axis=0))
    if order % 2:
        mat = 0.5 * (mat - mat.T)
    else:
        mat = 0.5 * (mat + mat.T)
    mat.flags.writeable = False
    return mat


def differentiation_matrix(grid: Grid, order: int) -> np.ndarray:
    """Dense matrix D with ``D @ f == differentiate(f, order).values``."""
    _check_order(order)
    if grid.periodic:
        return _spectral_matrix(grid, order)
    return _box_matrix(grid, order)


def _check_order(order: int) -> None:
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")


def spectral_derivative(values: np.ndarray, grid: Grid, order: int) -> np.ndarray:
    k = grid.wavenumbers[: grid.n // 2 + 1].copy()
    k[-1] = abs(k[-1])
    mult = (1j * k) ** order
    if order % 2:
        mult[-1] = 0.0
    return np.fft.irfft(mult * np.fft.rfft(values), n=grid.n)


def differentiate(field: Field, order: int) -> Field:
    """Spectral derivative on periodic grids, 4th-order finite differences on boxes."""
    _check_order(order)
    grid = field.grid
    if grid.periodic:
        return Field(grid, spectral_derivative(field.values, grid, order))
    return Field(grid, _box_matrix(grid, order) @ field.values)


# --- interpolation ----------------------------------------------------------


def interpolator(field: Field) -> Callable:
    """Band-limited (periodic) or cubic-spline (box) interpolant of ``field``.

    The returned callable accepts a scalar or an array of positions; periodic
    interpolants are evaluated modulo the period.
    """
    grid = field.grid
    if not grid.periodic:
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(grid.points, field.values)

        def cubic(q):
            out = spline(q)
            return float(out) if np.ndim(out) == 0 else out

        return cubic

    n = grid.n
    coeff = np.fft.rfft(field.values) / n
    coeff[1:-1] *= 2
    coeff[-1] = coeff[-1].real  # Nyquist term is a pure cosine
    k = 2 * np.pi * np.arange(n // 2 + 1) / grid.length
    origin = grid.points[0]

    def trig(q):
        x = np.asarray(q, dtype=float) - origin
        if x.ndim == 0:
            return float(np.real(np.dot(coeff, np.exp(1j * k * x))))
        return np.real(np.exp(1j * np.multiply.outer(x, k)) @ coeff)

    return trig


# --- quadrature -------------------------------------------------------------


def inner_product(f: Field, g: Field) -> float:
    _check_same_grid(f, g)
    return float(f.grid.spacing * np.dot(f.values, g.values))


def norm_l2(f: Field) -> float:
    return math.sqrt(inner_product(f, f))


def norm_sup(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def integrate(f: Field) -> float:
    return float(f.grid.spacing * np.sum(f.values))
