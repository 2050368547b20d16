"""Experiment configuration in a flat ``key = value`` text format.

Values are written as TOML-style literals (numbers, ``"strings"``,
``true``/``false``, ``[lists]``).  Keys holding ``None`` are omitted.  Floats
are written with ``repr`` so that parsing the text gives back the same config.
"""

from __future__ import annotations

import ast
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .analysis import perturbation
from .solver import SimState, SolverConfig, make_state
from .spectral import Domain, SpectralField, analyze, build_domain, inverse_helmholtz

INITIAL_KINDS = ("random", "modes", "bump")
_FLOATS = ("M", "dt0", "dt_min", "t_end", "cfl_safety", "output_dt", "epsilon", "bump_width", "bump_mass")
_INTS = ("dim", "gamma", "seed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # domain
    dim: int = 1
    lengths: tuple = (np.pi,)
    grid: tuple = (64,)
    # model
    M: float = 1.0
    gamma: int = 0
    # solver
    dt0: float = 1e-2
    dt_min: float = 1e-10
    t_end: float = 10.0
    dealias: str = "two_thirds"
    scheme: str = "imex_cnab2"
    blowup_linf_threshold: float | None = None
    cfl_safety: float = 0.5
    output_dt: float = 0.1
    nonlinear: bool = True
    # initial data: random | modes | bump
    initial: str = "random"
    epsilon: float = 1e-3
    # modes: rows (amplitude, k1[, k2]); u0 = epsilon * sum amplitude * cos modes
    modes: tuple = ((1.0, 1),)
    bump_center: tuple | None = None
    bump_width: float = 0.1
    # bump runs set M = bump_mass / |Omega|; the M key is not used
    bump_mass: float = 1.0
    seed: int = 0
    # norm labels to write; empty means all
    outputs: tuple = ()

    def __post_init__(self):
        # normalise types so equal configs serialise (and hash) identically
        try:
            for name in _FLOATS:
                object.__setattr__(self, name, _as_float(getattr(self, name), name))
            for name in _INTS:
                object.__setattr__(self, name, _as_int(getattr(self, name), name))
            object.__setattr__(self, "lengths", tuple(_as_float(x, "lengths") for x in self.lengths))
            object.__setattr__(self, "grid", tuple(_as_int(n, "grid") for n in self.grid))
            object.__setattr__(self, "outputs", tuple(str(o) for o in self.outputs))
            if self.blowup_linf_threshold is not None:
                object.__setattr__(self, "blowup_linf_threshold",
                                   _as_float(self.blowup_linf_threshold, "blowup_linf_threshold"))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(self.nonlinear, bool):
            raise ConfigError("nonlinear must be true or false")
        object.__setattr__(self, "modes", tuple(tuple(m) for m in self.modes))
        if self.bump_center is not None:
            object.__setattr__(self, "bump_center", tuple(float(c) for c in self.bump_center))
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"initial must be one of {INITIAL_KINDS}")
        if self.gamma not in (0, 1):
            raise ConfigError("gamma must be 0 or 1")
        if self.M < 0:
            raise ConfigError("M must be nonnegative")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        try:
            d = self.domain()
            self.solver_config()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.initial == "modes":
            for row in self.modes:
                if len(row) != 1 + d.dim:
                    raise ConfigError(f"mode rows need 1 + dim = {1 + d.dim} entries, got {row}")
                ks = row[1:]
                if any(int(k) != k or not 0 <= k < n for k, n in zip(ks, d.grid)):
                    raise ConfigError(f"mode index out of range: {row}")
                if all(k == 0 for k in ks):
                    raise ConfigError("the k=0 mode would change the mean")
        if self.initial == "bump":
            if self.bump_width <= 0 or self.bump_mass <= 0:
                raise ConfigError("bump_width and bump_mass must be positive")
            if self.bump_center is not None and len(self.bump_center) != d.dim:
                raise ConfigError("bump_center needs one coordinate per axis")

    # --- derived objects ---

    def domain(self) -> Domain:
        return build_domain(self.dim, list(self.lengths), list(self.grid))

    def solver_config(self) -> SolverConfig:
        return SolverConfig(dt0=self.dt0, dt_min=self.dt_min, t_end=self.t_end, dealias=self.dealias,
                            scheme=self.scheme, blowup_linf_threshold=self.blowup_linf_threshold,
                            cfl_safety=self.cfl_safety, output_dt=self.output_dt,
                            nonlinear=self.nonlinear)

    @property
    def effective_M(self) -> float:
        if self.initial == "bump":
            return self.bump_mass / self.domain().volume()
        return float(self.M)

    def initial_u(self) -> SpectralField:
        """Mean-zero initial perturbation ``u0 = rho0 - M``."""
        d = self.domain()
        if self.initial == "random":
            return perturbation(d, self.epsilon, self.seed)
        if self.initial == "modes":
            c = np.zeros(d.shape)
            for amp, *ks in self.modes:
                c[tuple(int(k) for k in ks)] += self.epsilon * amp
            return SpectralField(d, c)
        pts = d.points()
        centre = self.bump_center or tuple(L / 2 for L in d.lengths)
        r2 = sum((x - x0) ** 2 for x, x0 in zip(pts, centre))
        bump = np.exp(-r2 / (2 * self.bump_width**2))
        # normalise with the spectral mean so the discrete mass is exact
        rho = bump * (self.bump_mass / (analyze(bump, d).flat[0] * d.volume()))
        c = analyze(rho, d)
        c.flat[0] = 0.0
        return SpectralField(d, c)

    def initial_state(self) -> SimState:
        """Solver state; for gamma=1 the signal starts at ``(I - Delta)^{-1} u0``."""
        u0 = self.initial_u()
        v0 = inverse_helmholtz(u0) if self.gamma == 1 else None
        return make_state(u0, self.effective_M, self.gamma, v0, dt=self.dt0)

    # --- serialisation ---

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_format(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, rest = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = _parse(rest.strip(), lineno)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_text(text)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _as_float(x, name: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float, np.integer, np.floating)):
        raise ConfigError(f"{name} must be a number, got {x!r}")
    return float(x)


def _as_int(x, name: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float, np.integer, np.floating)) or int(x) != x:
        raise ConfigError(f"{name} must be an integer, got {x!r}")
    return int(x)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_format(v) for v in value) + "]"
    raise ConfigError(f"cannot serialise {value!r}")


_NAMES = {"true": True, "false": False, "inf": float("inf")}


def _parse(text: str, lineno: int):
    try:
        node = ast.parse(text, mode="eval").body
        return _literal(node)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r}") from exc


def _literal(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, (ast.List, ast.Tuple)):
        return tuple(_literal(e) for e in node.elts)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _literal(node.operand)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return -v if isinstance(node.op, ast.USub) else v
    raise ValueError("unsupported literal")
