"""Empirical constants for the L^p-L^q decay estimates and the convolution integral bound.

A bound of the form ``||out(t)||_p <= C (1 + t^-sigma) e^{-mu t} ||in||_q`` cannot be
refuted by sampling, but it can be measured: we report the supremum of the
ratio over random inputs and a time grid together with three checks.

* ``finite``: the supremum is a finite positive number.
* ``stable``: doubling the sample count moves it by at most ``STABILITY_TOL``.
* ``gap_ok``: the slowest mode of the flow decays at least as fast as ``mu``,
  so the ratio cannot grow without bound as ``t -> infinity``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import semigroups as sg
from .norms import grid_lp_norm
from .spectral import Domain, gradient_values, sine_component_values, synthesize

STABILITY_TOL = 0.25
GAP_SLACK = 1e-8
DEFAULT_T_GRID = np.geomspace(1e-3, 20.0, 80)

KINDS = {
    "heat": "||e^{t Delta} w||_p vs ||w||_q, w mean-zero",
    "heat_gradient": "||grad e^{t Delta} w||_p vs ||w||_q",
    "heat_divergence": "||e^{t Delta} div w||_p vs ||w||_q",
    "gamma0": "||e^{tL} u0||_p vs ||u0||_q",
    "gamma0_divergence": "||e^{tL} div w||_p vs ||w||_q",
    "gamma1": "||u(t)||_p vs ||u0||_{d/2} + ||grad v0||_d",
    "gamma1_gradient": "||grad v(t)||_p vs ||u0||_{d/2} + ||grad v0||_d (factor p)",
    "gamma1_joint": "||u(t)||_p + ||grad v(t)||_p vs ||u0||_q + ||grad v0||_q",
    "gamma1_divergence": "||u(t)||_p vs ||w||_q with u0 = div w, v0 = 0",
}


@dataclass
class BoundReport:
    kind: str
    p: float
    q: float
    sigma: float
    mu: float
    constant: float
    constant_half: float
    argmax_t: float
    argmax_sample: int
    samples: int
    finite: bool
    stable: bool
    gap_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _inv(p: float) -> float:
    return 0.0 if np.isinf(p) else 1.0 / p


def _envelope(t: np.ndarray, sigma: float, mu: float) -> np.ndarray:
    # sigma = 0 (p = q) drops the singular term: the estimate is a pure contraction
    sing = 1.0 + t ** (-sigma) if sigma > 0 else np.ones_like(t)
    return sing * np.exp(-mu * t)


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _hypotheses(kind: str, d: int, p: float, q: float) -> tuple[float, float]:
    """Validate exponents for ``kind``; return ``(sigma, q_effective)``."""
    span = _inv(q) - _inv(p)
    if kind in ("heat", "heat_gradient", "gamma0"):
        _require(1 <= q <= p, f"{kind} needs 1 <= q <= p <= inf (got p={p}, q={q})")
        if kind == "gamma0":
            _require(p > 1, "gamma0 bound needs p > 1")
        sigma = d / 2 * span + (0.5 if kind == "heat_gradient" else 0.0)
        return sigma, q
    if kind in ("heat_divergence", "gamma0_divergence"):
        _require(1 < q <= p, f"{kind} needs 1 < q <= p <= inf (got p={p}, q={q})")
        return 0.5 + d / 2 * span, q
    # doubly parabolic family
    _require(d >= 2, f"{kind} is stated for d >= 2")
    _require(not np.isinf(p), f"{kind} needs p < inf")
    if kind == "gamma1":
        _require(p > 1 and p >= d / 2, "gamma1 bound needs p > 1 and d/2 <= p < inf")
        return d / 2 * (2 / d - 1 / p), d / 2
    if kind == "gamma1_gradient":
        _require(p >= d, "gamma1_gradient bound needs d <= p < inf")
        return d / 2 * (1 / d - 1 / p), d / 2
    if kind == "gamma1_joint":
        _require(2 <= q <= p, "gamma1_joint bound needs 2 <= q <= p < inf")
        return d / 2 * span, q
    if kind == "gamma1_divergence":
        _require(q > d / 2 and q > 1 and q <= p, "gamma1_divergence needs d/2 < q <= p < inf, q > 1")
        return 0.5 + d / 2 * span, q
    raise ValueError(f"unknown bound kind {kind!r}; choose from {sorted(KINDS)}")


def _vector_norm(comps: list[np.ndarray], domain: Domain, q: float) -> np.ndarray:
    vals = [sine_component_values(c, domain, ax) for c, ax in zip(comps, domain.axes)]
    mag = np.sqrt(sum(v * v for v in vals))
    return grid_lp_norm(mag, domain, q)


def _grad_norm(coeffs: np.ndarray, domain: Domain, p: float) -> np.ndarray:
    g = gradient_values(coeffs, domain)
    mag = np.abs(g[0]) if len(g) == 1 else np.sqrt(sum(x * x for x in g))
    return grid_lp_norm(mag, domain, p)


def _lp(coeffs: np.ndarray, domain: Domain, p: float) -> np.ndarray:
    return grid_lp_norm(synthesize(coeffs, domain), domain, p)


def _problem(kind: str, domain: Domain, M: float, p: float, q: float,
             rng: np.random.Generator, n: int) -> tuple[np.ndarray, Callable, float, float]:
    """Random inputs for ``kind``: ``(input norms, t -> output norms, mu, gap)``."""
    lam = domain.eigenvalues
    pos = lam[lam > 0]
    if kind.startswith("heat"):
        mu, gap = domain.lambda1, float(pos.min())
    elif kind.startswith("gamma0"):
        mu = domain.lambda1 * (1 - M / (1 + domain.lambda1))
        gap = float(sg.gamma0_rate(pos, M).min())
    else:
        mu = domain.lambda1 - 0.5 * (np.sqrt(4 * domain.lambda1 * M + 1) - 1)
        gap = float(sg.gamma1_slow_rate(pos, M).min())

    if kind.endswith("divergence"):
        w = sg.random_vector_field(domain, rng, n)
        c0 = sum(kk * b for kk, b in zip(domain.wavenumbers, w))
        inputs = _vector_norm(w, domain, q)
    elif kind.startswith("gamma1"):
        c0 = sg.random_coeffs(domain, rng, n)
        v0 = sg.random_coeffs(domain, rng, n)
        inputs = _lp(c0, domain, q) + _grad_norm(v0, domain, domain.dim if kind != "gamma1_joint" else q)
    else:
        c0 = sg.random_coeffs(domain, rng, n, mean_zero=(kind != "heat_gradient"))
        inputs = _lp(c0, domain, q)

    if kind.startswith("heat"):
        def out(t):
            c = sg.heat_coeffs(c0, domain, t)
            return _grad_norm(c, domain, p) if kind == "heat_gradient" else _lp(c, domain, p)
    elif kind.startswith("gamma0"):
        def out(t):
            return _lp(sg.gamma0_coeffs(c0, domain, t, M), domain, p)
    else:
        v_init = np.zeros_like(c0) if kind == "gamma1_divergence" else v0

        def out(t):
            u, v = sg.gamma1_coeffs(c0, v_init, domain, t, M)
            if kind == "gamma1_gradient":
                return _grad_norm(v, domain, p)
            if kind == "gamma1_joint":
                return _lp(u, domain, p) + _grad_norm(v, domain, p)
            return _lp(u, domain, p)
    return inputs, out, mu, gap


def check_lp_lq_bound(kind: str, domain: Domain, p: float, q: float | None = None, M: float = 1.0,
                      samples: int = 200, t_grid=None, seed: int = 0) -> BoundReport:
    """Measure the empirical constant of one L^p-L^q semigroup estimate.

    ``q`` is ignored for ``gamma1`` and ``gamma1_gradient``, whose input norm is
    fixed to ``||u0||_{d/2} + ||grad v0||_d``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; choose from {sorted(KINDS)}")
    lam1 = domain.lambda1
    if not kind.startswith("heat"):
        _require(0 <= M < 1 + lam1, f"{kind} bound needs 0 <= M < 1 + lambda1 = {1 + lam1}")
    q = p if q is None else q
    sigma, q = _hypotheses(kind, domain.dim, float(p), float(q))
    t_grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    _require(samples >= 2, "need at least two samples")

    rng = np.random.default_rng(seed)
    inputs, out, mu, gap = _problem(kind, domain, M, p, q, rng, samples)
    env = _envelope(t_grid, sigma, mu)
    if kind == "gamma1_gradient":
        env = env * p
    ratios = np.empty((samples, t_grid.size))
    for j, t in enumerate(t_grid):
        ratios[:, j] = out(t) / (env[j] * inputs)

    s, j = np.unravel_index(np.argmax(ratios), ratios.shape)
    constant = float(ratios[s, j])
    half = float(ratios[: samples // 2].max())
    finite = bool(np.isfinite(constant) and constant > 0)
    stable = finite and constant <= (1 + STABILITY_TOL) * half
    gap_ok = gap >= mu * (1 - GAP_SLACK) - GAP_SLACK
    return BoundReport(kind, float(p), float(q), float(sigma), float(mu), constant, half,
                       float(t_grid[j]), int(s), samples, finite, bool(stable), bool(gap_ok),
                       bool(finite and stable and gap_ok))


# --- convolution integral -------------------------------------------------------

@dataclass
class IntegralReport:
    alpha: float
    beta: float
    gamma_rate: float
    delta_rate: float
    constant: float
    constant_extended: float
    argmax_t: float
    finite: bool
    stable: bool
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check_lmint_args(alpha, beta, gamma_rate, delta_rate):
    _require(0 < alpha < 1 and 0 < beta < 1, "alpha and beta must lie in (0, 1)")
    _require(gamma_rate > 0 and delta_rate > 0, "rates must be positive")
    _require(gamma_rate != delta_rate, "the estimate needs gamma != delta")


def lmint_integral(t: float, alpha: float, beta: float, gamma_rate: float, delta_rate: float) -> float:
    """``int_0^t (1+(t-s)^-a) e^{-g(t-s)} (1+s^-b) e^{-d s} ds`` by adaptive quadrature.

    Each half of the interval is mapped with ``s = u^{1/(1-b)}`` (resp. the same
    for ``t - s``) which removes the integrable endpoint singularity.
    """
    _check_lmint_args(alpha, beta, gamma_rate, delta_rate)
    if t <= 0:
        return 0.0
    a, b, g, d = alpha, beta, gamma_rate, delta_rate
    half = 0.5 * t

    def left(u):
        s = u ** (1 / (1 - b))
        return (1 + (t - s) ** (-a)) * np.exp(-g * (t - s) - d * s) * (1 + s**b) / (1 - b)

    def right(u):
        r = u ** (1 / (1 - a))
        return (1 + (t - r) ** (-b)) * np.exp(-g * r - d * (t - r)) * (1 + r**a) / (1 - a)

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=200)
    i1, _ = integrate.quad(left, 0.0, half ** (1 - b), **opts)
    i2, _ = integrate.quad(right, 0.0, half ** (1 - a), **opts)
    return i1 + i2


def lmint_envelope(t, alpha, beta, gamma_rate, delta_rate):
    """Shape ``K (1 + t^{min(0, 1-a-b)}) e^{-min(g, d) t}`` with the stated ``K``."""
    K = 1 / abs(delta_rate - gamma_rate) + 1 / (1 - alpha) + 1 / (1 - beta)
    t = np.asarray(t, dtype=float)
    return K * (1 + t ** min(0.0, 1 - alpha - beta)) * np.exp(-min(gamma_rate, delta_rate) * t)


def check_lmint_bound(alpha: float, beta: float, gamma_rate: float, delta_rate: float,
                      t_grid=None, extension: float = 10.0, tol: float = 0.1) -> IntegralReport:
    """Empirical constant of the convolution-integral estimate.

    ``stable`` requires that extending the time grid down by a factor
    ``extension`` and up by a factor 2 raises the supremum by at most ``tol``
    (relative).
    """
    _check_lmint_args(alpha, beta, gamma_rate, delta_rate)
    t_grid = np.geomspace(1e-3, 20.0, 60) if t_grid is None else np.asarray(t_grid, dtype=float)
    t_ext = np.concatenate([np.geomspace(t_grid[0] / extension, t_grid[0], 8, endpoint=False),
                            np.geomspace(t_grid[-1], t_grid[-1] * 2, 8)[1:]])

    def ratios(ts):
        vals = np.array([lmint_integral(t, alpha, beta, gamma_rate, delta_rate) for t in ts])
        return vals / lmint_envelope(ts, alpha, beta, gamma_rate, delta_rate)

    r = ratios(t_grid)
    j = int(np.argmax(r))
    constant = float(r[j])
    extended = max(constant, float(ratios(t_ext).max()))
    finite = bool(np.isfinite(constant) and constant > 0)
    stable = finite and extended <= (1 + tol) * constant
    return IntegralReport(alpha, beta, gamma_rate, delta_rate, constant, extended,
                          float(t_grid[j]), finite, bool(stable), bool(finite and stable))
