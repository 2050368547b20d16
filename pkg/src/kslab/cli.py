"""Command-line front end: ``kslab {eig,rates,linear,simulate,sweep,verify,disk}``.

Every file written embeds the config hash and the seed.  Files are written
to a temporary name and renamed into place.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis
from . import semigroups as sg
from .config import ConfigError, ExperimentConfig
from .solver import SimState, measure, norm_labels, simulate
from .spectral import SpectralField, spectrum

log = logging.getLogger("kslab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


# --- flag parsing ---------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow}


def parse_length(text: str) -> float:
    """Positive real from an arithmetic expression in numbers and ``pi``, e.g. ``2*pi``."""
    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        raise ValueError
    try:
        value = ev(ast.parse(text.strip(), mode="eval").body)
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a length expression: {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"length must be positive, got {text!r}")
    return value


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--L", nargs="+", type=parse_length, metavar="LEN",
                   help="edge length(s); one value for an interval, two for a rectangle")
    p.add_argument("--N", nargs="+", type=int, help="grid points per axis")
    p.add_argument("--M", type=float, help="background density")
    p.add_argument("--gamma", type=int, choices=(0, 1))
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--dt0", type=float)
    p.add_argument("--output-dt", type=float, dest="output_dt")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", type=Path, help="config file; its values override the flags")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="kslab", description="Spectral Keller-Segel lab")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eig", parents=[common], help="Neumann eigenvalue table")
    p.add_argument("--count", type=int, default=10)
    sub.add_parser("rates", parents=[common], help="linear decay rates")
    sub.add_parser("linear", parents=[common], help="evolve the linearized flow, write norms CSV")
    sub.add_parser("simulate", parents=[common], help="nonlinear run, write norms CSV and JSON summary")
    p = sub.add_parser("sweep", parents=[common], help="threshold sweep over M")
    p.add_argument("--M-min", type=float, default=0.0, dest="M_min")
    p.add_argument("--M-max", type=float, default=4.0, dest="M_max")
    p.add_argument("--M-step", type=float, default=0.05, dest="M_step")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("verify", parents=[common], help="lemma verification suites")
    p.add_argument("suites", nargs="*", choices=analysis.SUITES + ("all",), default=["all"])
    p.add_argument("--samples", type=int)
    p = sub.add_parser("disk", help="Neumann constants of a disk")
    p.add_argument("--radius", type=float, default=1.0)
    return parser


def config_from_args(args) -> ExperimentConfig:
    if args.config is not None:
        return ExperimentConfig.load(args.config)
    values = {}
    if args.L is not None:
        values["dim"] = len(args.L)
        values["lengths"] = tuple(args.L)
    if args.N is not None:
        dim = values.get("dim", len(args.N))
        if len(args.N) not in (1, dim):
            raise ConfigError("--N needs one value or one per axis")
        values["grid"] = tuple(args.N) * (dim if len(args.N) == 1 else 1)
        values.setdefault("dim", dim)
        values.setdefault("lengths", (math.pi,) * dim)
    elif "dim" in values:
        values["grid"] = (64,) * values["dim"] if values["dim"] == 1 else (32,) * values["dim"]
    for key in ("M", "gamma", "t_end", "dt0", "output_dt", "seed"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# --- output ---------------------------------------------------------------------

def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return "%.17g" % x if isinstance(x, (float, np.floating)) else str(x)


def csv_text(header: list[str], rows, config_hash: str, seed: int) -> str:
    lines = [f"# config_hash={config_hash} seed={seed}", ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def norms_csv(times, norms: dict, labels: list[str], cfg: ExperimentConfig) -> str:
    rows = [[float(t)] + [float(norms[lab][i]) for lab in labels] for i, t in enumerate(times)]
    return csv_text(["t"] + labels, rows, cfg.config_hash(), cfg.seed)


def jsonable(obj):
    """Plain-JSON version of ``obj``; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def json_text(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _labels(cfg: ExperimentConfig) -> list[str]:
    labels = norm_labels(cfg.dim)
    if cfg.outputs:
        unknown = set(cfg.outputs) - set(labels)
        if unknown:
            raise ConfigError(f"unknown output labels {sorted(unknown)}; available {labels}")
        labels = [lab for lab in labels if lab in cfg.outputs]
    return labels


def _require_finite(norms: dict):
    for lab, vals in norms.items():
        if not np.all(np.isfinite(vals)):
            raise NumericalFailure(f"non-finite values in {lab}")


def fit_all(times, norms: dict, labels: list[str]) -> list[dict]:
    fits = []
    series_t = np.asarray(times)
    for lab in labels:
        vals = np.asarray(norms[lab])
        if np.any(vals <= 0):
            continue
        try:
            f = analysis.fit_decay_rate(analysis.TimeSeries(series_t, vals, lab))
        except ValueError:
            continue
        fits.append({"label": lab, "rate": f.rate, "r2": f.r_squared, "window": list(f.window)})
    return fits


# --- subcommands ------------------------------------------------------------------

def cmd_eig(args, cfg: ExperimentConfig) -> int:
    d = cfg.domain()
    spec = spectrum(d, args.count)
    print(f"lambda1 = {spec.lambda1:.17g}")
    print("index,eigenvalue")
    for idx, lam in zip(spec.indices, spec.eigenvalues):
        print(f"{'/'.join(str(int(i)) for i in idx)},{lam:.17g}")
    return EXIT_OK


def cmd_rates(args, cfg: ExperimentConfig) -> int:
    t = sg.rate_table(cfg.domain(), cfg.effective_M, modes=5)
    print(f"M = {t.M:.17g}")
    print(f"lambda1 = {t.lambda1:.17g}")
    print(f"mu0 = {t.mu0:.17g}")
    print(f"mu1 = {t.mu1:.17g}")
    print(f"delta0 = {t.delta0:.17g}")
    print(f"stable = {str(t.stable).lower()}")
    print("eigenvalue,slow_rate_gamma0,slow_rate_gamma1")
    for lam, r0, r1 in zip(t.eigenvalues, t.slow_gamma0, t.slow_gamma1):
        print(f"{lam:.17g},{r0:.17g},{r1:.17g}")
    return EXIT_OK


def cmd_linear(args, cfg: ExperimentConfig) -> int:
    initial = cfg.initial_state()
    d = initial.domain
    labels = _labels(cfg)
    n_out = int(round(cfg.t_end / cfg.output_dt))
    times = np.arange(n_out + 1) * cfg.output_dt
    rows = []
    for t in times:
        u, v = analysis.linear_flow(initial, float(t))
        rows.append(measure(SimState(SpectralField(d, u), SpectralField(d, v), float(t), cfg.dt0,
                                     initial.M, initial.gamma)))
    norms = {lab: np.array([r[lab] for r in rows]) for lab in labels}
    _require_finite(norms)
    atomic_write(args.out / "linear.csv", norms_csv(times, norms, labels, cfg))
    print(f"wrote {args.out / 'linear.csv'}")
    return EXIT_OK


def cmd_simulate(args, cfg: ExperimentConfig) -> int:
    run = simulate(cfg.initial_state(), cfg.solver_config())
    labels = _labels(cfg)
    _require_finite(run.norms)
    fits = fit_all(run.times, run.norms, labels) if run.status == "ok" else []
    summary = {"config_hash": cfg.config_hash(), "seed": cfg.seed, "status": run.status,
               "mass_drift": run.mass_drift, "fits": fits}
    atomic_write(args.out / "norms.csv", norms_csv(run.times, run.norms, labels, cfg))
    atomic_write(args.out / "summary.json", json_text(summary))
    print(f"status = {run.status}  t = {run.final_state.t:.6g}  mass_drift = {run.mass_drift:.3e}")
    return EXIT_OK


SWEEP_FIELDS = ("gamma", "M", "lambda1", "volume", "outcome", "fitted_rate", "predicted_rate", "seed")


def cmd_sweep(args, cfg: ExperimentConfig) -> int:
    if args.M_step <= 0 or args.M_max < args.M_min:
        raise ConfigError("need M_step > 0 and M_max >= M_min")
    n = int(math.floor((args.M_max - args.M_min) / args.M_step + 1e-9)) + 1
    grid = [round(args.M_min + i * args.M_step, 12) for i in range(n)]
    cells = analysis.threshold_sweep(cfg.domain(), grid, cfg.gamma, cfg.epsilon, cfg.seed,
                                     cfg.solver_config(), workers=args.workers)
    rows = [[getattr(c, f) for f in SWEEP_FIELDS] for c in cells]
    atomic_write(args.out / "sweep.csv", csv_text(list(SWEEP_FIELDS), rows, cfg.config_hash(), cfg.seed))
    bracket = analysis.threshold_bracket(cells)
    print(f"cells = {len(cells)}  bracket = {bracket}")
    return EXIT_OK


def cmd_verify(args, cfg: ExperimentConfig) -> int:
    names = analysis.SUITES if "all" in args.suites else tuple(dict.fromkeys(args.suites))
    reports = []
    for name in names:
        M = cfg.M if args.M is not None or args.config is not None else None
        rep = analysis.verify_lemma_suite(name, samples=args.samples, seed=cfg.seed, M=M)
        reports.append(rep)
        print(f"{name}: {'PASS' if rep['passed'] else 'FAIL'}")
    out = {"config_hash": cfg.config_hash(), "seed": cfg.seed,
           "passed": all(r["passed"] for r in reports), "suites": reports}
    atomic_write(args.out / "verify.json", json_text(out))
    return EXIT_OK


def cmd_disk(args) -> int:
    try:
        c = analysis.disk_constants(args.radius)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"radius = {c.radius:.17g}")
    print(f"bessel_zero = {c.bessel_zero:.17g}")
    print(f"lambda1_disk = {c.lambda1_disk:.17g}")
    print(f"lambda1_times_area = {c.lambda1_times_area:.17g}  ({c.in_units_of_pi:.4f} pi)")
    print(f"critical_mass_8pi = {c.critical_mass:.17g}")
    print(f"below_8pi = {str(c.lambda1_times_area < c.critical_mass).lower()}")
    return EXIT_OK


COMMANDS = {"eig": cmd_eig, "rates": cmd_rates, "linear": cmd_linear, "simulate": cmd_simulate,
            "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "disk":
            return cmd_disk(args)
        cfg = config_from_args(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
