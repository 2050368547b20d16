"""Pseudo-spectral time integration of the reduced Keller-Segel system.

The unknowns are ``u = rho - M`` and ``v = c - M``:

    u_t = Delta u - M Delta v - div(u grad v)
    gamma v_t = Delta v - v + u

The linear part is diagonal (gamma=0, after eliminating ``v``) or 2x2 block
diagonal (gamma=1) in the cosine basis and is propagated exactly.  The
quadratic term is explicit.  Two exponential IMEX schemes are offered:

``imex_euler``
    ``x+ = e^{hA} x + h phi_1(hA) N(x)``
``imex_cnab2``
    ``x+ = e^{hA} x + h phi_1(hA) N_n + h phi_2(hA) (N_n - N_{n-1})``, i.e. the
    Adams-Bashforth-2 extrapolation of the nonlinear term on top of the exact
    linear propagator.  Second order; bootstrapped by one ``imex_euler`` step
    and restarted the same way whenever the step size changes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from . import semigroups as sg
from .norms import grid_lp_norm, gradient_magnitude
from .spectral import (Domain, SpectralField, divergence_coeffs, gradient_values,
                       inverse_helmholtz, synthesize)

log = logging.getLogger(__name__)

SCHEMES = ("imex_cnab2", "imex_euler")
DEALIAS = ("two_thirds", "none")
STATUSES = ("ok", "dt_collapsed", "linf_exceeded")


@dataclass(frozen=True)
class SolverConfig:
    dt0: float = 1e-2
    dt_min: float = 1e-10
    t_end: float = 10.0
    dealias: str = "two_thirds"
    scheme: str = "imex_cnab2"
    # None: 1e6 times the initial sup of rho
    blowup_linf_threshold: float | None = None
    cfl_safety: float = 0.5
    output_dt: float = 0.1
    nonlinear: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.dealias not in DEALIAS:
            raise ValueError(f"dealias must be one of {DEALIAS}")
        if not 0 < self.dt_min < self.dt0:
            raise ValueError("need 0 < dt_min < dt0")
        if self.t_end <= 0 or self.output_dt <= 0 or self.cfl_safety <= 0:
            raise ValueError("t_end, output_dt and cfl_safety must be positive")
        if self.blowup_linf_threshold is not None and self.blowup_linf_threshold <= 0:
            raise ValueError("blowup_linf_threshold must be positive")
        ratio = self.output_dt / self.dt0
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise ValueError("output_dt must be an integer multiple of dt0")


@dataclass(frozen=True)
class StepOutcome:
    status: str
    max_linf: float
    nonlinear_cfl: float
    t: float = 0.0
    dt: float = 0.0


@dataclass(frozen=True)
class SimState:
    u: SpectralField
    v: SpectralField
    t: float
    dt: float
    M: float
    gamma: int
    diagnostics: tuple = ()
    # Adams-Bashforth history: nonlinear term of the previous step and its size
    prev_nonlinear: np.ndarray | None = field(default=None, repr=False)
    prev_dt: float | None = None

    @property
    def domain(self) -> Domain:
        return self.u.domain

    def rho_values(self) -> np.ndarray:
        return self.u.grid_values() + self.M


def make_state(u0: SpectralField, M: float, gamma: int, v0: SpectralField | None = None,
               dt: float = 1e-2) -> SimState:
    """Initial state; for gamma=0 ``v`` is slaved to ``u`` and ``v0`` is ignored."""
    if gamma not in (0, 1):
        raise ValueError("gamma must be 0 or 1")
    if M < 0:
        raise ValueError("M must be nonnegative")
    if gamma == 0:
        v0 = inverse_helmholtz(u0)
    elif v0 is None:
        raise ValueError("gamma=1 needs an initial signal v0")
    return SimState(u0, v0, 0.0, dt, float(M), gamma)


# --- nonlinear term -------------------------------------------------------------

def _nonlinear_coeffs(uc: np.ndarray, vc: np.ndarray, domain: Domain, dealias: str) -> np.ndarray:
    if dealias == "two_thirds":
        mask = domain.dealias_mask()
        uc = uc * mask
        vc = vc * mask
    ug = synthesize(uc, domain)
    flux = [ug * g for g in gradient_values(vc, domain)]
    out = -divergence_coeffs(flux, domain)
    if dealias == "two_thirds":
        out = out * mask
    out.flat[0] = 0.0
    return out


def nonlinear_term(u: SpectralField, v: SpectralField, dealias: str = "two_thirds") -> SpectralField:
    """``-div(u grad v)`` evaluated pseudo-spectrally."""
    if u.domain != v.domain:
        raise ValueError("u and v live on different domains")
    if dealias not in DEALIAS:
        raise ValueError(f"dealias must be one of {DEALIAS}")
    return SpectralField(u.domain, _nonlinear_coeffs(u.coeffs, v.coeffs, u.domain, dealias))


# --- propagators ----------------------------------------------------------------

@lru_cache(maxsize=64)
def _propagators(domain: Domain, M: float, gamma: int, h: float):
    lam = domain.eigenvalues
    if gamma == 0:
        z = -h * sg.gamma0_rate(lam, M)
        return np.exp(z), h * sg.phi(1, z), h * sg.phi(2, z)
    E = [np.array(e) for e in sg.expm_modes(lam, M, h)]
    P1 = [h * np.array(e) for e in sg.phi_modes(1, lam, M, h)]
    P2 = [h * np.array(e) for e in sg.phi_modes(2, lam, M, h)]
    # mean of u is invariant: pin the k=0 row exactly
    E[0].flat[0], E[1].flat[0] = 1.0, 0.0
    return tuple(E), tuple(P1), tuple(P2)


def _advance(state: SimState, dt: float, scheme: str, dealias: str, nonlinear: bool,
             gamma: int) -> SimState:
    if state.gamma != gamma:
        raise ValueError(f"state has gamma={state.gamma}, stepper expects {gamma}")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    d = state.domain
    uc, vc = state.u.coeffs, state.v.coeffs
    N = _nonlinear_coeffs(uc, vc, d, dealias) if nonlinear else np.zeros_like(uc)
    multistep = scheme == "imex_cnab2" and state.prev_nonlinear is not None and state.prev_dt == dt
    dN = N - state.prev_nonlinear if multistep else None
    E, P1, P2 = _propagators(d, state.M, gamma, float(dt))
    if gamma == 0:
        u = E * uc + P1 * N
        if multistep:
            u = u + P2 * dN
        v = u / (1.0 + d.eigenvalues)
    else:
        u = E[0] * uc + E[1] * vc + P1[0] * N
        v = E[2] * uc + E[3] * vc + P1[2] * N
        if multistep:
            u = u + P2[0] * dN
            v = v + P2[2] * dN
    return replace(state, u=SpectralField(d, u), v=SpectralField(d, v), t=state.t + dt, dt=dt,
                   prev_nonlinear=N, prev_dt=dt)


def step_gamma0(state: SimState, dt: float, scheme: str = "imex_cnab2",
                dealias: str = "two_thirds", nonlinear: bool = True) -> SimState:
    """One step of the parabolic-elliptic system; ``v`` is re-slaved afterwards."""
    return _advance(state, dt, scheme, dealias, nonlinear, 0)


def step_gamma1(state: SimState, dt: float, scheme: str = "imex_cnab2",
                dealias: str = "two_thirds", nonlinear: bool = True) -> SimState:
    """One step of the doubly parabolic system with the exact 2x2 propagator per mode."""
    return _advance(state, dt, scheme, dealias, nonlinear, 1)


# --- driver ---------------------------------------------------------------------

@dataclass
class RunRecord:
    times: np.ndarray
    norms: dict[str, np.ndarray]
    status: str
    final_state: SimState
    mass_initial: float
    mass_final: float
    min_rho: float
    steps: int
    threshold: float
    outcomes: list[StepOutcome] = field(default_factory=list, repr=False)

    @property
    def mass_drift(self) -> float:
        return abs(self.mass_final - self.mass_initial)

    @property
    def mass_drift_rate(self) -> float:
        """Total-mass drift per unit simulated time."""
        return self.mass_drift / max(self.final_state.t, 1e-300)


def norm_labels(dim: int) -> list[str]:
    p_crit = max(1.0, dim / 2)
    return [f"u_L{p_crit:g}", "u_L2", "u_Linf", f"grad_v_L{dim}", "grad_v_Linf"]


def measure(state: SimState) -> dict[str, float]:
    d = state.domain
    ug = state.u.grid_values()
    gv = gradient_magnitude(state.v.coeffs, d)
    p_crit = max(1.0, d.dim / 2)
    vals = [grid_lp_norm(ug, d, p_crit), grid_lp_norm(ug, d, 2), grid_lp_norm(ug, d, np.inf),
            grid_lp_norm(gv, d, d.dim), grid_lp_norm(gv, d, np.inf)]
    return dict(zip(norm_labels(d.dim), (float(x) for x in vals)))


def simulate(initial: SimState, config: SolverConfig,
             observer: Callable[[SimState], None] | None = None) -> RunRecord:
    """Integrate to ``config.t_end`` recording norms every ``config.output_dt``.

    ``observer``, if given, is called with the state at every output time.

    The step is halved (and the multistep history discarded) whenever the
    explicit transport number ``||grad v||_inf dt / h`` exceeds
    ``cfl_safety`` or a step produces non-finite values.  The run stops with
    ``dt_collapsed`` once ``dt < dt_min`` and with ``linf_exceeded`` once
    ``||rho||_inf`` passes the blow-up threshold.
    """
    d = initial.domain
    step = step_gamma0 if initial.gamma == 0 else step_gamma1
    rho0 = initial.rho_values()
    threshold = config.blowup_linf_threshold or 1e6 * float(np.max(np.abs(rho0)))
    mass0 = float(initial.u.coeffs.flat[0]) * d.volume()

    state = replace(initial, prev_nonlinear=None, prev_dt=None)
    labels = norm_labels(d.dim)
    times = [state.t]
    rows = [measure(state)]
    if observer:
        observer(state)
    outcomes: list[StepOutcome] = []
    min_rho = float(rho0.min())
    status = "ok"
    dt = config.dt0
    steps = 0
    n_out = int(round(config.t_end / config.output_dt))

    for k in range(1, n_out + 1):
        target = initial.t + k * config.output_dt
        remaining = int(round((target - state.t) / dt))
        while remaining > 0:
            grad_inf = float(np.max(gradient_magnitude(state.v.coeffs, d)))
            cfl = grad_inf * dt / d.spacing
            new = None
            if cfl <= config.cfl_safety:
                new = step(state, dt, config.scheme, config.dealias, config.nonlinear)
                if not (np.all(np.isfinite(new.u.coeffs)) and np.all(np.isfinite(new.v.coeffs))):
                    new = None
            if new is None:
                dt *= 0.5
                state = replace(state, prev_nonlinear=None, prev_dt=None)
                if dt < config.dt_min:
                    status = "dt_collapsed"
                    outcomes.append(StepOutcome(status, float(np.max(np.abs(state.rho_values()))),
                                                cfl, state.t, dt))
                    break
                remaining = int(round((target - state.t) / dt))
                continue
            state = new
            steps += 1
            remaining -= 1
            rho = state.rho_values()
            linf = float(np.max(np.abs(rho)))
            min_rho = min(min_rho, float(rho.min()))
            if linf > threshold:
                status = "linf_exceeded"
                outcomes.append(StepOutcome(status, linf, cfl, state.t, dt))
                break
            outcomes.append(StepOutcome("ok", linf, cfl, state.t, dt))
        if status != "ok":
            times.append(state.t)
            rows.append(measure(state))
            log.info("run stopped at t=%.6g with status %s", state.t, status)
            break
        state = replace(state, t=target)
        times.append(state.t)
        rows.append(measure(state))
        if observer:
            observer(state)

    state = replace(state, diagnostics=tuple(outcomes))
    norms = {lab: np.array([r[lab] for r in rows]) for lab in labels}
    return RunRecord(np.array(times), norms, status, state, mass0,
                     float(state.u.coeffs.flat[0]) * d.volume(), min_rho, steps, threshold,
                     outcomes)
