"""Spectral lab for the Keller-Segel chemotaxis system on Neumann boxes."""

from .spectral import (Domain, EigenSpectrum, SpectralField, build_domain, inverse_helmholtz,
                       lambda1, laplacian, spectrum, to_grid, to_spectral)
from .norms import grad_lp_norm, lp_norm, mass, mean, poincare_ratio
from .semigroups import (LinearState, RateTable, rate_table, semigroup_gamma0_apply,
                         semigroup_gamma1_apply, heat_apply)
from .bounds import BoundReport, IntegralReport, check_lmint_bound, check_lp_lq_bound
from .solver import SimState, SolverConfig, StepOutcome, make_state, simulate, step_gamma0, step_gamma1
from .analysis import (DecayFit, SweepCell, TimeSeries, compare_linear_nonlinear, disk_constants,
                       fit_decay_rate, threshold_sweep, verify_lemma_suite)
from .config import ConfigError, ExperimentConfig

__version__ = "0.1.0"
