"""Periodic 1-D grid, Fourier differentiation, and Sobolev diagnostics.

All fields are real trigonometric interpolants on a uniform periodic grid.
Derivatives, antiderivatives and L2 quadrature are spectral (exact for
resolved modes); nonlinear products go through the 2/3 dealiasing rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, GridMismatchError, NonIntegrableSourceError

MAX_DERIVATIVE_ORDER = 8


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, L) with N collocation points."""

    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigurationError(f"domain length must be positive, got L={self.L}")
        if self.N < 8 or self.N % 2 != 0:
            raise ConfigurationError(f"N must be an even integer >= 8, got N={self.N}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * (self.L / self.N)

    @property
    def k(self) -> np.ndarray:
        """Wavenumbers 2*pi*j/L for the rfft index set j = 0..N/2."""
        return 2.0 * np.pi * np.arange(self.N // 2 + 1) / self.L

    @property
    def modes(self) -> np.ndarray:
        """Integer mode indices 0..N/2 (rfft layout)."""
        return np.arange(self.N // 2 + 1)


def make_grid(L: float, N: int) -> GridSpec:
    return GridSpec(float(L), int(N))


class Field:
    """Real-valued periodic grid function with cached spectral coefficients.

    Immutable: the sample array is write-protected after construction.
    """

    __slots__ = ("grid", "samples", "_coeffs")

    def __init__(self, grid: GridSpec, samples: np.ndarray):
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape != (grid.N,):
            raise ConfigurationError(
                f"sample array of shape {samples.shape} does not match N={grid.N}"
            )
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("field samples must be finite")
        samples = samples.copy()
        samples.setflags(write=False)
        self.grid = grid
        self.samples = samples
        self._coeffs = None

    @property
    def coeffs(self) -> np.ndarray:
        """rfft coefficients (unnormalized numpy convention), cached."""
        if self._coeffs is None:
            c = np.fft.rfft(self.samples)
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    @classmethod
    def from_coeffs(cls, grid: GridSpec, coeffs: np.ndarray) -> "Field":
        return cls(grid, np.fft.irfft(coeffs, n=grid.N))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.asarray(fn(grid.x), dtype=np.float64))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.N))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "Field":
        return cls(grid, np.full(grid.N, float(value)))

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def __add__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.samples + other.samples)
        return Field(self.grid, self.samples + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.samples - other.samples)
        return Field(self.grid, self.samples - float(other))

    def __rsub__(self, other):
        return Field(self.grid, float(other) - self.samples)

    def __mul__(self, scalar):
        return Field(self.grid, self.samples * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.samples)

    def __repr__(self):
        return f"Field(N={self.grid.N}, L={self.grid.L:g}, max|f|={np.max(np.abs(self.samples)):.3e})"


def _check_same_grid(*fields: Field) -> GridSpec:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid.N != g.N or f.grid.L != g.L:
            raise GridMismatchError(
                f"fields live on different grids: (L={g.L}, N={g.N}) vs (L={f.grid.L}, N={f.grid.N})"
            )
    return g


def spectral_derivative(f: Field, m: int) -> Field:
    """m-th spatial derivative, exact for modes below N/2.

    The Nyquist mode is treated as a pure cosine: odd derivatives kill it.
    """
    if m < 0 or m > MAX_DERIVATIVE_ORDER:
        raise ConfigurationError(f"derivative order must be in 0..{MAX_DERIVATIVE_ORDER}, got {m}")
    if m == 0:
        return f
    c = f.coeffs * (1j * f.grid.k) ** m
    if m % 2 == 1:
        c = c.copy()
        c[-1] = 0.0
    return Field.from_coeffs(f.grid, c)


def _dealias_coeffs(c: np.ndarray, N: int) -> np.ndarray:
    kc = N // 3
    out = c.copy()
    out[kc + 1:] = 0.0
    return out


def dealias_truncate(f: Field) -> Field:
    """Band-limit a field to the 2/3-rule mode budget (modes <= N/3)."""
    return Field.from_coeffs(f.grid, _dealias_coeffs(f.coeffs, f.grid.N))


def dealiased_product(f: Field, g: Field) -> Field:
    """Pointwise product with 2/3-rule truncation of aliased modes.

    Inputs are truncated to modes <= N/3 before multiplying, the product is
    truncated again; aliases of the kept modes land entirely in the removed
    band, so the result is alias-free.
    """
    grid = _check_same_grid(f, g)
    ft = np.fft.irfft(_dealias_coeffs(f.coeffs, grid.N), n=grid.N)
    gt = np.fft.irfft(_dealias_coeffs(g.coeffs, grid.N), n=grid.N)
    pc = _dealias_coeffs(np.fft.rfft(ft * gt), grid.N)
    return Field.from_coeffs(grid, pc)


def antiderivative_zero_mean(f: Field, tol_mean_rel: float = 1e-10) -> Field:
    """Periodic antiderivative with zero spatial mean.

    Requires f to have (numerically) zero mean; otherwise no periodic
    antiderivative exists and a broken upstream computation is signalled.
    """
    scale = float(np.max(np.abs(f.samples)))
    tol = tol_mean_rel * max(scale, 1.0)
    if abs(f.mean()) > tol:
        raise NonIntegrableSourceError(
            f"source has mean {f.mean():.3e} (tolerance {tol:.3e}); "
            "no periodic antiderivative exists"
        )
    k = f.grid.k
    c = np.zeros_like(f.coeffs)
    c[1:] = f.coeffs[1:] / (1j * k[1:])
    c[-1] = 0.0  # Nyquist cosine has no periodic sine antiderivative; mode is below tol anyway
    return Field.from_coeffs(f.grid, c)


def integral(f: Field) -> float:
    """Exact integral of the trigonometric interpolant over one period."""
    return f.mean() * f.grid.L


def l2_norm_sq(f: Field) -> float:
    """Exact ||f||_{L2}^2 of the interpolant via Parseval."""
    c = f.coeffs
    N = f.grid.N
    w = np.full(c.shape, 2.0)
    w[0] = 1.0
    if N % 2 == 0:
        w[-1] = 1.0
    return float(np.sum(w * np.abs(c) ** 2) * f.grid.L / N**2)


def sobolev_norm(f: Field, s: int) -> float:
    """H^s norm: ( sum_{j=0}^{s} ||d^j f/dx^j||_{L2}^2 )^{1/2}."""
    if s < 0 or s > 6:
        raise ConfigurationError(f"Sobolev index must be in 0..6, got {s}")
    total = 0.0
    for j in range(s + 1):
        total += l2_norm_sq(spectral_derivative(f, j))
    return float(np.sqrt(total))


@dataclass(frozen=True)
class TripleNorm:
    """Breakdown of the epsilon-weighted remainder norm.

    total_sq = h2_sq + eps_d3_sq + eps2_d4_sq + eps3_d5_sq + eps4_d6_sq,
    summed in exactly that order.  total_ne_u omits the N_i contribution
    from the H^2 part.
    """

    eps: float
    h2_sq: float
    h2_ne_u_sq: float
    eps_d3_sq: float
    eps2_d4_sq: float
    eps3_d5_sq: float
    eps4_d6_sq: float

    @property
    def total_sq(self) -> float:
        return self.h2_sq + self.eps_d3_sq + self.eps2_d4_sq + self.eps3_d5_sq + self.eps4_d6_sq

    @property
    def total(self) -> float:
        return float(np.sqrt(self.total_sq))

    @property
    def total_ne_u_sq(self) -> float:
        return self.h2_ne_u_sq + self.eps_d3_sq + self.eps2_d4_sq + self.eps3_d5_sq + self.eps4_d6_sq

    @property
    def total_ne_u(self) -> float:
        return float(np.sqrt(self.total_ne_u_sq))


def triple_norm(N_i: Field, N_e: Field, U: Field, eps: float) -> TripleNorm:
    """Weighted energy |||(N_i, N_e, U)|||_eps with per-term breakdown."""
    _check_same_grid(N_i, N_e, U)
    if not 0.0 < eps < 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {eps}")
    h2_ni = sobolev_norm(N_i, 2) ** 2
    h2_ne = sobolev_norm(N_e, 2) ** 2
    h2_u = sobolev_norm(U, 2) ** 2
    d3_ne = l2_norm_sq(spectral_derivative(N_e, 3))
    d3_u = l2_norm_sq(spectral_derivative(U, 3))
    return TripleNorm(
        eps=eps,
        h2_sq=h2_ni + h2_ne + h2_u,
        h2_ne_u_sq=h2_ne + h2_u,
        eps_d3_sq=eps * (d3_ne + d3_u),
        eps2_d4_sq=eps**2 * l2_norm_sq(spectral_derivative(N_e, 4)),
        eps3_d5_sq=eps**3 * l2_norm_sq(spectral_derivative(N_e, 5)),
        eps4_d6_sq=eps**4 * l2_norm_sq(spectral_derivative(N_e, 6)),
    )
