"""Command-line entry point: ``semispec <subcommand> --config FILE``.

Every data file is named ``<subcommand>_<confighash>.<ext>`` and contains no
timestamps, so an identical config reproduces identical bytes. Run metadata
(time, argv, threads) goes to a separate ``.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .discretize import ResolutionRule, assemble, grid_for
from .eigensolve import leftmost, refine_filter, solve
from .errors import ConfigError, NumericalError, RegimeError, SemispecError
from .potentials import predicted_limit
from .pseudospec import field, strip_sup, write_field_csv
from .semigroup import decay_curve, decay_rate_fit, default_window, gp_envelope, write_decay_csv
from .sweep import compare_to_theory, fit_powerlaw, gl_preset, run_h_sweep, write_gl_csv, write_sweep_csv
from .validation import validate_models, write_validation_csv

EXIT_OK = 0


# -- serialization ---------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([obj.real, obj.imag], indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in items):
            return "[" + ", ".join(dumps(v) for v in items) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class Outputs:
    """Serialized writer for one run; collects paths for the sidecar."""

    def __init__(self, directory, subcommand: str, config_hash: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.stem = f"{subcommand}_{config_hash}"
        self.config_hash = config_hash
        self.written = []

    def path(self, suffix: str) -> Path:
        p = self.dir / f"{self.stem}{suffix}"
        self.written.append(p.name)
        return p

    def json(self, suffix: str, payload: dict) -> Path:
        p = self.path(suffix)
        p.write_text(dumps({"config_hash": self.config_hash, **payload}) + "\n")
        return p

    def sidecar(self, argv, threads, started, exit_code):
        meta = {
            "config_hash": self.config_hash,
            "files": self.written,
            "argv": list(argv),
            "threads": threads,
            "exit_code": exit_code,
            "started_unix": started,
            "elapsed_s": time.time() - started,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        (self.dir / f"{self.stem}.meta.json").write_text(json.dumps(meta, indent=2) + "\n")


# -- shared helpers --------------------------------------------------------

def _resolve_threads(arg: Optional[int]) -> int:
    if arg is None:
        env = os.environ.get("SEMISPEC_THREADS")
        if env is None or env.strip() == "":
            return 1
        try:
            arg = int(env)
        except ValueError as err:
            raise ConfigError(f"SEMISPEC_THREADS must be an integer, got {env!r}") from err
    if arg < 0:
        raise ConfigError("--threads must be non-negative")
    return arg or (os.cpu_count() or 1)


def _predicted(cfg: ExperimentConfig):
    """Predicted asymptote, checked against a forced regime."""
    pred = predicted_limit(cfg.profile(), cfg.domain)
    want = {"airy": "NoCriticalPoint", "morse": "Morse"}.get(cfg.regime)
    if want is not None and pred.regime != want:
        raise RegimeError(f"config forces regime {cfg.regime!r} but the potential is in regime {pred.regime}",
                          detected=pred.regime)
    return pred


def _rule(pred) -> str:
    return "Airy" if pred.regime == "NoCriticalPoint" else "Morse"


def _pick_h(explicit, cfg, what):
    if explicit is not None:
        return explicit
    if not cfg.hs:
        raise ConfigError(f"{what}: set h in its section or give hs in [problem]")
    return cfg.hs[0]


def _predicted_dict(pred):
    return {
        "regime": pred.regime,
        "exponent": pred.exponent,
        "prefactor": pred.prefactor,
        "imag_center": pred.imag_center,
        "lower_bound_only": pred.lower_bound_only,
        "warnings": list(pred.warnings),
    }


def _single_level_op(cfg, pred, h):
    rule = ResolutionRule(_rule(pred), cfg.points_per_scale)
    grid = grid_for(h, cfg.domain, rule)
    return assemble(grid, cfg.profile(), h)


def _strip_gamma(cfg, pred, h):
    if not math.isfinite(pred.prefactor):
        raise RegimeError("no finite predicted prefactor to place the strip", regime=pred.regime)
    return cfg.pseudo.gamma_fraction * pred.prefactor * h ** pred.exponent


# -- subcommands -----------------------------------------------------------

def cmd_spectrum(cfg, out: Outputs, threads, dense_cap):
    pred = _predicted(cfg)
    h = _pick_h(cfg.spectrum_h, cfg, "spectrum")
    settings = cfg.settings(dense_cap, threads)
    rule = ResolutionRule(_rule(pred), cfg.points_per_scale)
    factor = 2 ** (cfg.levels - 1)
    grid = grid_for(h, cfg.domain, rule, refine_factor=factor)
    profile = cfg.profile()
    spec = refine_filter(lambda f: assemble(grid.refined(f), profile, h), cfg.levels,
                         solver=lambda op: solve(op, settings.dense_cap, plan=settings.plan,
                                                 method=settings.method, threads=threads))
    lam = leftmost(spec)
    p = out.json(".json", {
        "potential": cfg.potential,
        "h": h,
        "predicted": _predicted_dict(pred),
        "leftmost": lam,
        "scaled_real": lam.real / h ** pred.exponent,
        "refinement_history": list(spec.history),
        "spectrum": spec.to_dict(),
    })
    print(f"leftmost = {lam.real:.12g} {lam.imag:+.12g}i  (N = {grid.refined(factor).N})")
    print(p)


def cmd_sweep(cfg, out: Outputs, threads, dense_cap):
    if not cfg.hs:
        raise ConfigError("hs empty")
    pred = _predicted(cfg)
    rows = run_h_sweep(cfg.profile(), cfg.domain, cfg.hs, pred, cfg.settings(dense_cap, threads))
    if not any(r.ok for r in rows):
        raise NumericalError("no sweep row succeeded", rows=[r.error for r in rows])
    write_sweep_csv(rows, out.path(".csv"))
    fit = verdict = None
    notes = []
    try:
        fit = fit_powerlaw(rows, pred)
    except ConfigError as err:
        notes.append(str(err))
    if fit is not None:
        if pred.lower_bound_only:
            notes.append("prediction is a lower bound only: exploratory run, no pass/fail verdict")
        else:
            verdict = compare_to_theory(fit, pred, cfg.sweep_tolerance)
    p = out.json(".json", {
        "potential": cfg.potential,
        "predicted": _predicted_dict(pred),
        "row_errors": [{"h": r.h, "error": r.error} for r in rows if r.error is not None],
        "fit": None if fit is None else fit.to_dict(),
        "verdict": verdict,
        "notes": notes,
    })
    for r in rows:
        print(f"h = {r.h:<8g} " + (f"scaled_real = {r.scaled_real:.8g}" if r.ok else f"error: {r.error['message']}"))
    if verdict is not None:
        print("verdict:", "pass" if verdict["pass"] else "fail")
    print(p)


def cmd_pseudo(cfg, out: Outputs, threads, dense_cap):
    pred = _predicted(cfg)
    h = _pick_h(cfg.pseudo.h, cfg, "pseudo")
    op = _single_level_op(cfg, pred, h)
    spec = solve(op, dense_cap, plan=cfg.plan(), method=cfg.method, threads=threads)
    gamma = _strip_gamma(cfg, pred, h)
    strip = strip_sup(op, gamma, nu_samples=cfg.pseudo.nu_samples, eigenvalues=spec.eigenvalues, threads=threads)
    if cfg.pseudo.region is not None:
        region = cfg.pseudo.region
    else:
        lam = leftmost(spec)
        v = op.potential_part
        region = (0.0, 3.0 * lam.real, float(v.min()), float(v.max()))
    f = field(op, region, cfg.pseudo.nx, cfg.pseudo.ny, threads=threads)
    write_field_csv(f, out.path(".csv"))
    p = out.json(".json", {
        "potential": cfg.potential,
        "h": h,
        "N": op.N,
        "predicted": _predicted_dict(pred),
        "gamma_max": gamma,
        "strip_sup": strip.sup,
        "nu_at_sup": strip.nu_at_sup,
        "scaled_strip_sup": h ** pred.exponent * strip.sup,
        "region": list(region),
        "nus": list(strip.nus),
        "norms": list(strip.norms),
    })
    print(f"strip sup at Re z = {gamma:.6g}: {strip.sup:.8g}  (h^e * sup = {h ** pred.exponent * strip.sup:.6g})")
    print(p)


def cmd_decay(cfg, out: Outputs, threads, dense_cap):
    pred = _predicted(cfg)
    h = _pick_h(cfg.decay.h, cfg, "decay")
    op = _single_level_op(cfg, pred, h)
    spec = solve(op, dense_cap, method="dense")
    min_re = float(spec.eigenvalues.real.min())
    ts = np.linspace(0.0, cfg.decay.t_max_factor / min_re, cfg.decay.samples)
    curve = decay_curve(op, ts, dense_cap=dense_cap, threads=threads)
    rate = decay_rate_fit(curve, default_window(min_re))
    omega = _strip_gamma(cfg, pred, h)
    strip = strip_sup(op, omega, nu_samples=cfg.pseudo.nu_samples, eigenvalues=spec.eigenvalues, threads=threads)
    env = gp_envelope(strip.sup, omega, cfg.decay.c0)
    values = env(curve.ts)
    below = bool(np.all(np.asarray(curve.norms) <= values))
    write_decay_csv(curve, env, out.path(".csv"))
    p = out.json(".json", {
        "potential": cfg.potential,
        "h": h,
        "N": op.N,
        "min_re_spectrum": min_re,
        "fitted_rate": rate,
        "rate_relative_error": abs(rate - min_re) / min_re,
        "fit_window": list(default_window(min_re)),
        "envelope": {"M": env.M, "M1": env.M1, "M2": env.M2, "omega": env.omega, "c0": env.c0,
                     "resolvent_bound": env.resolvent_bound},
        "curve_below_envelope": below,
    })
    print(f"fitted rate {rate:.8g} vs min Re spectrum {min_re:.8g}; below envelope: {below}")
    print(p)


def cmd_gl(cfg, out: Outputs, threads, dense_cap):
    if not cfg.Rs:
        raise ConfigError("Rs empty: set Rs in [gl]")
    rows, verdict = gl_preset(cfg.profile(), cfg.domain, cfg.Rs, cfg.settings(dense_cap, threads))
    write_gl_csv(rows, out.path(".csv"))
    p = out.json(".json", {
        "potential": cfg.potential,
        "row_errors": [{"R": r.R, "error": r.error} for r in rows if r.error is not None],
        "non_asymptotic_R": [r.R for r in rows if not r.asymptotic],
        "verdict": verdict.to_dict(),
    })
    for r in rows:
        print(f"R = {r.R:<6g} rate = {r.gl_decay_rate}" if r.error is None else f"R = {r.R:<6g} error")
    print("stable" if verdict.stable else "unstable", "| consistent:", verdict.consistent)
    print(p)


def cmd_models_validate(cfg, out: Outputs, threads, dense_cap):
    n = cfg.models_n if cfg is not None else 2000
    rows = validate_models(n)
    write_validation_csv(rows, out.path(".csv"))
    failed = [r for r in rows if not r.passed]
    print(f"{'model':<34} {'k':>2} {'abs error':>12} {'tolerance':>10}  result")
    for r in rows:
        print(f"{r.model:<34} {r.index:>2} {r.error:12.3e} {r.tolerance:10.1e}  {'pass' if r.passed else 'FAIL'}")
    if failed:
        raise NumericalError(f"{len(failed)} model eigenvalue(s) outside tolerance",
                             failures=[{"model": r.model, "index": r.index, "error": r.error,
                                        "tolerance": r.tolerance} for r in failed])


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "pseudo": cmd_pseudo,
    "decay": cmd_decay,
    "gl": cmd_gl,
    "models": cmd_models_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config file")
    common.add_argument("--out", type=Path, help="output directory (overrides [outputs] directory)")
    common.add_argument("--threads", type=int, default=None, help="worker threads, 0 = all cores")
    common.add_argument("--dense-cap", type=int, default=None, help="largest N solved densely")

    parser = argparse.ArgumentParser(prog="semispec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "sweep", "pseudo", "decay", "gl"):
        sub.add_parser(name, parents=[common])
    models = sub.add_parser("models")
    msub = models.add_subparsers(dest="action", required=True)
    msub.add_parser("validate", parents=[common])
    return parser


def _model_hash(n: int) -> str:
    import hashlib

    return hashlib.sha256(f"models.n={n}".encode()).hexdigest()[:12]


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.time()
    out = None
    threads = 1
    try:
        threads = _resolve_threads(args.threads)
        if args.command == "models":
            cfg = load_config(args.config) if args.config else None
            chash = cfg.hash if cfg else _model_hash(2000)
            name = "models_validate"
        else:
            if args.config is None:
                raise ConfigError("--config is required")
            cfg = load_config(args.config)
            chash, name = cfg.hash, args.command
        if args.dense_cap is not None and args.dense_cap < 1:
            raise ConfigError("--dense-cap must be positive")
        dense_cap = args.dense_cap or (cfg.dense_cap if cfg else None)
        directory = args.out or (cfg.directory if cfg else "out")
        out = Outputs(directory, name, chash)
        COMMANDS[args.command](cfg, out, threads, dense_cap)
        code = EXIT_OK
    except SemispecError as err:
        sys.stderr.write(json.dumps({"exit_code": err.exit_code, **err.to_dict()}, default=str) + "\n")
        code = err.exit_code
    except ValueError as err:
        sys.stderr.write(json.dumps({"exit_code": 1, "error": "config", "message": str(err)}) + "\n")
        code = 1
    if out is not None:
        out.sidecar(argv, threads, started, code)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
