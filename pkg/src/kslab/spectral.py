"""Neumann box domains and the cosine spectral basis.

Fields live on the midpoint grid ``x_j = (j + 1/2) L / N`` of each axis and are
expanded in ``prod_i cos(k_i pi x_i / L_i)``.  On that grid the DCT-II/DCT-III
pair is an exact inverse, so analysis and synthesis are lossless up to
round-off.  Derivatives of cosine series are sine series, handled with the
DST-II/DST-III pair on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

MIN_GRID = 8


@dataclass(frozen=True)
class Domain:
    """Interval or rectangle ``prod_i (0, L_i)`` with Neumann boundary."""

    dim: int
    lengths: tuple[float, ...]
    grid: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.lengths) != self.dim or len(self.grid) != self.dim:
            raise ValueError("lengths and grid must have one entry per axis")
        for L in self.lengths:
            if not np.isfinite(L) or L <= 0:
                raise ValueError(f"edge lengths must be positive, got {self.lengths}")
        for n in self.grid:
            if n < MIN_GRID or n % 2:
                raise ValueError(f"grid sizes must be even and >= {MIN_GRID}, got {self.grid}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod([L / n for L, n in zip(self.lengths, self.grid)]))

    @cached_property
    def spacing(self) -> float:
        """Smallest grid spacing over all axes."""
        return min(L / n for L, n in zip(self.lengths, self.grid))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis ``k pi / L`` for ``k = 0..N-1``, broadcastable to ``shape``."""
        out = []
        for i, (L, n) in enumerate(zip(self.lengths, self.grid)):
            k = np.arange(n) * np.pi / L
            view = [1] * self.dim
            view[i] = n
            out.append(k.reshape(view))
        return tuple(out)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """``lambda_k = sum_i (k_i pi / L_i)^2`` on the coefficient array."""
        lam = np.zeros(self.shape)
        for kk in self.wavenumbers:
            lam = lam + kk**2
        lam.setflags(write=False)
        return lam

    @cached_property
    def lambda1(self) -> float:
        return min((np.pi / L) ** 2 for L in self.lengths)

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """``int_Omega phi_k^2 / |Omega|``: 1 for k=0, halved per nonzero index."""
        w = np.ones(self.shape)
        for i, n in enumerate(self.grid):
            view = [1] * self.dim
            view[i] = n
            wi = np.full(n, 0.5)
            wi[0] = 1.0
            w = w * wi.reshape(view)
        w.setflags(write=False)
        return w

    def points(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of midpoint collocation coordinates (``ij`` indexing)."""
        axes = [(np.arange(n) + 0.5) * L / n for L, n in zip(self.lengths, self.grid)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def dealias_mask(self) -> np.ndarray:
        """Boolean mask keeping modes ``k_i < 2 N_i / 3`` on every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for i, n in enumerate(self.grid):
            view = [1] * self.dim
            view[i] = n
            mask = mask & (3 * np.arange(n) < 2 * n).reshape(view)
        return mask


@dataclass(frozen=True)
class SpectralField:
    """Cosine coefficients of a scalar field on ``domain``."""

    domain: Domain
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != self.domain.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.domain.shape}")
        object.__setattr__(self, "coeffs", c)

    def grid_values(self) -> np.ndarray:
        return synthesize(self.coeffs, self.domain)

    def _check(self, other: SpectralField):
        if other.domain != self.domain:
            raise ValueError("fields live on different domains")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.domain, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralField:
        return SpectralField(self.domain, -self.coeffs)

    @classmethod
    def zeros(cls, domain: Domain) -> SpectralField:
        return cls(domain, np.zeros(domain.shape))


@dataclass(frozen=True)
class EigenSpectrum:
    eigenvalues: np.ndarray
    indices: np.ndarray
    lambda1: float


def build_domain(dim: int, lengths, grid) -> Domain:
    """Validate and build a :class:`Domain`; scalars are broadcast over axes."""
    lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
    grid = np.atleast_1d(np.asarray(grid))
    if lengths.size == 1 and dim > 1:
        lengths = np.repeat(lengths, dim)
    if grid.size == 1 and dim > 1:
        grid = np.repeat(grid, dim)
    if not np.all(grid == np.round(grid)):
        raise ValueError(f"grid sizes must be integers, got {grid}")
    return Domain(int(dim), tuple(float(L) for L in lengths), tuple(int(n) for n in grid))


def lambda1(domain: Domain) -> float:
    """First positive Neumann eigenvalue of ``domain``."""
    return domain.lambda1


def spectrum(domain: Domain, count: int | None = None) -> EigenSpectrum:
    """Eigenvalues of the resolved modes in ascending order with their multi-indices."""
    lam = domain.eigenvalues.ravel()
    order = np.argsort(lam, kind="stable")
    if count is not None:
        order = order[:count]
    idx = np.array(np.unravel_index(order, domain.shape)).T
    return EigenSpectrum(lam[order], idx, domain.lambda1)


# --- transforms -----------------------------------------------------------------

def _axis_view(values: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    view = [1] * ndim
    view[axis] = values.size
    return values.reshape(view)


def analyze(values: np.ndarray, domain: Domain) -> np.ndarray:
    """Grid values -> cosine coefficients.  Leading axes are treated as a batch."""
    values = np.asarray(values, dtype=float)
    if values.shape[values.ndim - domain.dim:] != domain.shape:
        raise ValueError(f"grid shape {values.shape} does not match domain {domain.shape}")
    c = fft.dctn(values, type=2, axes=domain.axes)
    for ax, n in zip(domain.axes, domain.grid):
        s = np.full(n, 1.0 / n)
        s[0] = 0.5 / n
        c *= _axis_view(s, ax, c.ndim)
    return c


def synthesize(coeffs: np.ndarray, domain: Domain) -> np.ndarray:
    """Cosine coefficients -> grid values (inverse of :func:`analyze`)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[coeffs.ndim - domain.dim:] != domain.shape:
        raise ValueError(f"coefficient shape {coeffs.shape} does not match domain {domain.shape}")
    b = coeffs.copy()
    for ax, n in zip(domain.axes, domain.grid):
        s = np.full(n, 0.5)
        s[0] = 1.0
        b *= _axis_view(s, ax, b.ndim)
    return fft.dctn(b, type=3, axes=domain.axes)


def _mixed_synthesize(coeffs: np.ndarray, domain: Domain, sine_axis: int) -> np.ndarray:
    """Synthesis with a sine series along ``sine_axis`` and cosine elsewhere.

    ``coeffs`` is indexed by mode number on every axis; along the sine axis the
    k=0 entry is ignored and mode N is not representable.
    """
    b = np.array(coeffs, dtype=float)
    for ax, n in zip(domain.axes, domain.grid):
        if ax == sine_axis:
            continue
        s = np.full(n, 0.5)
        s[0] = 1.0
        b *= _axis_view(s, ax, b.ndim)
    # DST-III input slot m-1 carries sine mode m with weight 2
    b = np.roll(b, -1, axis=sine_axis) * 0.5
    last = [slice(None)] * b.ndim
    last[sine_axis] = -1
    b[tuple(last)] = 0.0
    b = fft.dst(b, type=3, axis=sine_axis)
    others = tuple(ax for ax in domain.axes if ax != sine_axis)
    if others:
        b = fft.dctn(b, type=3, axes=others)
    return b


def _mixed_analyze(values: np.ndarray, domain: Domain, sine_axis: int) -> np.ndarray:
    """Inverse of :func:`_mixed_synthesize`; sine mode N is discarded."""
    c = np.asarray(values, dtype=float)
    others = tuple(ax for ax in domain.axes if ax != sine_axis)
    if others:
        c = fft.dctn(c, type=2, axes=others)
        for ax in others:
            n = c.shape[ax]
            s = np.full(n, 1.0 / n)
            s[0] = 0.5 / n
            c = c * _axis_view(s, ax, c.ndim)
    c = fft.dst(c, type=2, axis=sine_axis) / c.shape[sine_axis]
    c = np.roll(c, 1, axis=sine_axis)
    first = [slice(None)] * c.ndim
    first[sine_axis] = 0
    c[tuple(first)] = 0.0
    return c


def to_spectral(values, domain: Domain) -> SpectralField:
    return SpectralField(domain, analyze(values, domain))


def to_grid(field: SpectralField) -> np.ndarray:
    return synthesize(field.coeffs, field.domain)


# --- differential operators -------------------------------------------------------

def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.domain, -f.domain.eigenvalues * f.coeffs)


def inverse_helmholtz(f: SpectralField) -> SpectralField:
    """Apply ``(I - Delta)^{-1}``; every mode, including k=0, is invertible."""
    return SpectralField(f.domain, f.coeffs / (1.0 + f.domain.eigenvalues))


def gradient_values(coeffs: np.ndarray, domain: Domain) -> list[np.ndarray]:
    """Grid samples of each partial derivative of a (batched) cosine series."""
    out = []
    for ax, kk in zip(domain.axes, domain.wavenumbers):
        out.append(_mixed_synthesize(-kk * coeffs, domain, ax))
    return out


def gradient(f: SpectralField) -> list[np.ndarray]:
    """Exact per-mode gradient of ``f``, returned as grid values per axis."""
    return gradient_values(f.coeffs, f.domain)


def divergence_coeffs(components, domain: Domain) -> np.ndarray:
    """Cosine coefficients of ``div F`` for a grid vector field with ``F . n = 0``.

    Component ``i`` is expanded as a sine series along axis ``i``; the k=0 output
    coefficient is zero exactly.
    """
    if len(components) != domain.dim:
        raise ValueError("need one flux component per axis")
    out = None
    for comp, ax, kk in zip(components, domain.axes, domain.wavenumbers):
        term = kk * _mixed_analyze(comp, domain, ax)
        out = term if out is None else out + term
    return out


def sine_component_values(sine_coeffs: np.ndarray, domain: Domain, axis: int) -> np.ndarray:
    """Grid values of a field that is a sine series along ``axis`` (cosine elsewhere)."""
    return _mixed_synthesize(sine_coeffs, domain, axis)
