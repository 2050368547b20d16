"""Exact per-mode evaluation of the linearized Keller-Segel flows.

Every linear operator involved is diagonal in the cosine basis, so the three
semigroups reduce to scalar multipliers (heat flow, parabolic-elliptic flow)
or to a 2x2 matrix exponential per mode (doubly parabolic flow).  For the
latter the mode matrix is

    A_k = [[-lam_k,  M lam_k],
           [ 1,     -lam_k - 1]]

with real eigenvalues ``mu_pm = -(lam_k + 1/2) +- sqrt(1 + 4 M lam_k) / 2``.
Matrix functions are evaluated through the divided-difference (Newton) form
``g(A) = g(mu_-) I + g[mu_+, mu_-] (A - mu_- I)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .spectral import Domain, SpectralField

MEAN_TOL = 1e-12
_TAYLOR_RADIUS = 0.1
_TAYLOR_TERMS = 14


@dataclass(frozen=True)
class LinearState:
    """Mean-zero pair ``(u, v)``; ``v`` is ``None`` for the slaved gamma=0 flow."""

    u: SpectralField
    v: SpectralField | None = None

    def __post_init__(self):
        _require_mean_zero(self.u.coeffs, "u")
        if self.v is not None:
            if self.v.domain != self.u.domain:
                raise ValueError("u and v live on different domains")
            _require_mean_zero(self.v.coeffs, "v")


def _require_mean_zero(coeffs: np.ndarray, name: str = "field"):
    scale = max(float(np.max(np.abs(coeffs))), 1.0)
    if abs(coeffs.flat[0]) > MEAN_TOL * scale:
        raise ValueError(f"{name} must have zero mean (coefficient {coeffs.flat[0]:.3e})")


def _check_t(t: float):
    if t < 0:
        raise ValueError(f"semigroups are evaluated for t >= 0, got {t}")


# --- scalar phi functions -----------------------------------------------------

def phi(k: int, z) -> np.ndarray:
    """``phi_k(z) = sum_n z^n / (n + k)!``; ``phi_0 = exp``.

    Small arguments use the Taylor series to avoid cancellation.
    """
    z = np.asarray(z, dtype=float)
    if k == 0:
        return np.exp(z)
    small = np.abs(z) < _TAYLOR_RADIUS
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(z)
    for n in range(_TAYLOR_TERMS - 1, -1, -1):
        series = series * zs + 1.0 / factorial(n + k)
    zb = np.where(small, 1.0, z)
    # phi_k(z) = (phi_{k-1}(z) - 1/(k-1)!) / z
    direct = np.expm1(zb) / zb
    for j in range(2, k + 1):
        direct = (direct - 1.0 / factorial(j - 1)) / zb
    return np.where(small, series, direct)


# --- mode matrices ------------------------------------------------------------

def gamma0_rate(lam, M: float) -> np.ndarray:
    """Decay rate ``lam (1 - M / (1 + lam))`` of each mode under ``e^{tL}``."""
    lam = np.asarray(lam, dtype=float)
    return lam * (1.0 - M / (1.0 + lam))


def mode_matrix(lam, M: float) -> np.ndarray:
    """Stack of 2x2 matrices ``A_k`` with shape ``lam.shape + (2, 2)``."""
    lam = np.asarray(lam, dtype=float)
    A = np.empty(lam.shape + (2, 2))
    A[..., 0, 0] = -lam
    A[..., 0, 1] = M * lam
    A[..., 1, 0] = 1.0
    A[..., 1, 1] = -lam - 1.0
    return A


def mode_eigenvalues(lam, M: float) -> tuple[np.ndarray, np.ndarray]:
    """``(mu_plus, mu_minus)`` of ``A_k``; the gap ``sqrt(1 + 4 M lam)`` is >= 1."""
    lam = np.asarray(lam, dtype=float)
    root = np.sqrt(1.0 + 4.0 * M * lam)
    centre = -(lam + 0.5)
    return centre + 0.5 * root, centre - 0.5 * root


def gamma1_slow_rate(lam, M: float) -> np.ndarray:
    """``-mu_plus``: decay rate of the slow eigendirection of each mode."""
    return -mode_eigenvalues(lam, M)[0]


def _newton_form(lam, M, g_minus, divided):
    """Entries of ``g(A) = g(mu_-) I + D (A - mu_- I)``."""
    lam = np.asarray(lam, dtype=float)
    _, mu_m = mode_eigenvalues(lam, M)
    e11 = g_minus + divided * (-lam - mu_m)
    e12 = divided * (M * lam)
    e21 = divided
    e22 = g_minus + divided * (-lam - 1.0 - mu_m)
    return e11, e12, e21, e22


def expm_modes(lam, M: float, t: float):
    """Closed-form ``exp(t A_k)`` entries ``(e11, e12, e21, e22)``.

    The divided difference of ``exp(t.)`` is written ``t e^{t mu_+} phi_1(-t gap)``:
    no overflow for stiff modes, no cancellation when the eigenvalues nearly
    coincide.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    mu_p, mu_m = mode_eigenvalues(lam, M)
    gap = mu_p - mu_m
    g_minus = np.exp(t * mu_m)
    divided = t * np.exp(t * mu_p) * phi(1, -t * gap)
    return _newton_form(lam, M, g_minus, divided)


def phi_modes(k: int, lam, M: float, h: float):
    """Entries of ``phi_k(h A_k)`` for the exponential time integrators.

    The eigenvalue gap is at least 1 for ``M >= 0``, so the plain divided
    difference is well conditioned.
    """
    if k == 0:
        return expm_modes(lam, M, h)
    if M < 0:
        raise ValueError("M must be nonnegative")
    mu_p, mu_m = mode_eigenvalues(lam, M)
    g_m = phi(k, h * mu_m)
    divided = (phi(k, h * mu_p) - g_m) / (mu_p - mu_m)
    return _newton_form(lam, M, g_m, divided)


# --- semigroup actions --------------------------------------------------------

def heat_coeffs(coeffs: np.ndarray, domain: Domain, t: float) -> np.ndarray:
    _check_t(t)
    return coeffs * np.exp(-domain.eigenvalues * t)


def gamma0_coeffs(coeffs: np.ndarray, domain: Domain, t: float, M: float) -> np.ndarray:
    _check_t(t)
    return coeffs * np.exp(-gamma0_rate(domain.eigenvalues, M) * t)


def gamma1_coeffs(u: np.ndarray, v: np.ndarray, domain: Domain, t: float, M: float):
    _check_t(t)
    e11, e12, e21, e22 = expm_modes(domain.eigenvalues, M, t)
    return e11 * u + e12 * v, e21 * u + e22 * v


def heat_apply(f: SpectralField, t: float) -> SpectralField:
    """Neumann heat semigroup; the mean is left untouched."""
    return SpectralField(f.domain, heat_coeffs(f.coeffs, f.domain, t))


def semigroup_gamma0_apply(u0: SpectralField, t: float, M: float) -> SpectralField:
    """``e^{tL} u0`` with ``L = Delta - M Delta (I - Delta)^{-1}`` on mean-zero data."""
    _require_mean_zero(u0.coeffs, "u0")
    if M < 0:
        raise ValueError("M must be nonnegative")
    return SpectralField(u0.domain, gamma0_coeffs(u0.coeffs, u0.domain, t, M))


def semigroup_gamma1_apply(state: LinearState, t: float, M: float) -> LinearState:
    """``e^{tA} (u0, v0)`` for the doubly parabolic linearization."""
    if state.v is None:
        raise ValueError("the gamma=1 flow needs both u and v")
    d = state.u.domain
    u, v = gamma1_coeffs(state.u.coeffs, state.v.coeffs, d, t, M)
    u.flat[0] = 0.0
    v.flat[0] = 0.0
    return LinearState(SpectralField(d, u), SpectralField(d, v))


# --- rates --------------------------------------------------------------------

@dataclass(frozen=True)
class RateTable:
    M: float
    lambda1: float
    mu0: float
    mu1: float
    delta0: float
    eigenvalues: np.ndarray = field(repr=False)
    slow_gamma0: np.ndarray = field(repr=False)
    slow_gamma1: np.ndarray = field(repr=False)

    @property
    def stable(self) -> bool:
        return self.M < 1.0 + self.lambda1


def rate_table(domain: Domain, M: float, modes: int | None = None) -> RateTable:
    """Decay rates mu0, mu1, the optimal energy weight delta0 and per-mode slow rates.

    Per-mode rates are listed for the distinct positive eigenvalues resolved by
    ``domain`` (the first ``modes`` of them if given), ascending.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    lam1 = domain.lambda1
    root = np.sqrt(4.0 * lam1 * M + 1.0)
    lam = np.unique(domain.eigenvalues[domain.eigenvalues > 0])
    if modes is not None:
        lam = lam[:modes]
    return RateTable(
        M=float(M),
        lambda1=lam1,
        mu0=lam1 * (1.0 - M / (1.0 + lam1)),
        mu1=lam1 - 0.5 * (root - 1.0),
        delta0=(root - 1.0) / (2.0 * lam1),
        eigenvalues=lam,
        slow_gamma0=gamma0_rate(lam, M),
        slow_gamma1=gamma1_slow_rate(lam, M),
    )


# --- random test data ---------------------------------------------------------

def random_coeffs(domain: Domain, rng: np.random.Generator, size: int | None = None,
                  decay: float = 2.0, mean_zero: bool = True) -> np.ndarray:
    """Gaussian cosine coefficients scaled by ``(1 + lam_k)^{-decay}``."""
    shape = domain.shape if size is None else (size,) + domain.shape
    c = rng.standard_normal(shape) * (1.0 + domain.eigenvalues) ** (-decay)
    if mean_zero:
        c[(Ellipsis,) + (0,) * domain.dim] = 0.0
    return c


def random_field(domain: Domain, rng: np.random.Generator, decay: float = 2.0,
                 mean_zero: bool = True) -> SpectralField:
    return SpectralField(domain, random_coeffs(domain, rng, None, decay, mean_zero))


def random_vector_field(domain: Domain, rng: np.random.Generator, size: int | None = None,
                        decay: float = 2.0) -> list[np.ndarray]:
    """Sine-in-own-axis coefficients of a random vector field with ``w . n = 0``."""
    comps = []
    for ax in domain.axes:
        c = random_coeffs(domain, rng, size, decay, mean_zero=False)
        idx = [slice(None)] * c.ndim
        idx[ax] = 0
        c[tuple(idx)] = 0.0
        comps.append(c)
    return comps
