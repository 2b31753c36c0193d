"""Experiment configuration: an INI-style ``[section] key = value`` file.

Grammar (comments start with ``#`` or ``;``, inline or on their own line)::

    [problem]
    potential = x^2 + 2*y^2          # expression in x (and y in 2D)
    domain = rectangle -1 1 -1 1     # or: interval a b
    regime = auto                    # auto | airy | morse
    hs = 0.05, 0.03, 0.02            # strictly decreasing, comma or space separated

    [solver]
    dense_cap = 3000
    shifts = 0.5j, 1+2j              # optional override of the default shift plan
    tol = 1e-8
    points_per_scale = 10
    levels = 2

    [outputs]
    directory = out

Optional per-subcommand sections: ``[spectrum] h``; ``[sweep] tolerance``;
``[pseudo] h, gamma_fraction, nu_samples, region, nx, ny``;
``[decay] h, c0, samples, t_max_factor``; ``[gl] Rs``; ``[models] n``.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .eigensolve import DENSE_CAP, ShiftPlan
from .errors import ConfigError, ParseError
from .potentials import Interval, PotentialProfile, Rectangle
from .sweep import SolverSettings

KNOWN = {
    "problem": {"potential", "domain", "regime", "hs"},
    "solver": {"dense_cap", "shifts", "tol", "points_per_scale", "levels", "method", "k_per_shift"},
    "outputs": {"directory"},
    "spectrum": {"h"},
    "sweep": {"tolerance"},
    "pseudo": {"h", "gamma_fraction", "nu_samples", "region", "nx", "ny"},
    "decay": {"h", "c0", "samples", "t_max_factor"},
    "gl": {"rs"},
    "models": {"n"},
}
REGIMES = ("auto", "airy", "morse")
_SPLIT = re.compile(r"[,\s]+")


def _items(text: str):
    text = text.strip()
    # lists may be written bare or bracketed: "0.02, 0.01" or "[0.02, 0.01]"
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    return [t for t in _SPLIT.split(text.strip()) if t]


def _floats(text: str, what: str):
    try:
        return [float(t) for t in _items(text)]
    except ValueError as err:
        raise ConfigError(f"{what}: expected numbers, got {text!r}") from err


def _complexes(text: str):
    try:
        return [complex(t.replace("i", "j")) for t in _items(text)]
    except ValueError as err:
        raise ConfigError(f"shifts: expected complex numbers, got {text!r}") from err


@dataclass(frozen=True)
class PseudoSettings:
    h: Optional[float] = None
    gamma_fraction: float = 0.8
    nu_samples: int = 201
    region: Optional[tuple] = None
    nx: int = 40
    ny: int = 40


@dataclass(frozen=True)
class DecaySettings:
    h: Optional[float] = None
    c0: float = 1.0
    samples: int = 101
    t_max_factor: float = 10.0


@dataclass(frozen=True)
class ExperimentConfig:
    potential: str
    domain: object
    regime: str = "auto"
    hs: tuple = ()
    dense_cap: int = DENSE_CAP
    shifts: tuple = ()
    tol: float = 1e-8
    points_per_scale: int = 10
    levels: int = 2
    method: str = "auto"
    k_per_shift: int = 6
    directory: str = "out"
    spectrum_h: Optional[float] = None
    sweep_tolerance: float = 0.05
    pseudo: PseudoSettings = field(default_factory=PseudoSettings)
    decay: DecaySettings = field(default_factory=DecaySettings)
    Rs: tuple = ()
    models_n: int = 2000
    hash: str = ""

    @property
    def dim(self) -> int:
        return self.domain.dim

    def profile(self) -> PotentialProfile:
        return PotentialProfile.from_text(self.potential, self.dim)

    def plan(self) -> Optional[ShiftPlan]:
        if not self.shifts:
            return None
        return ShiftPlan(tuple(self.shifts), self.k_per_shift, self.tol)

    def settings(self, dense_cap: Optional[int] = None, threads: int = 1) -> SolverSettings:
        return SolverSettings(dense_cap=dense_cap or self.dense_cap, points_per_scale=self.points_per_scale,
                              levels=self.levels, method=self.method, threads=threads, plan=self.plan())


def _domain(text: str):
    parts = _items(text)
    if not parts:
        raise ConfigError("domain is empty")
    kind, nums = parts[0].lower(), parts[1:]
    try:
        vals = [float(v) for v in nums]
    except ValueError as err:
        raise ConfigError(f"domain: expected numbers after {kind!r}") from err
    try:
        if kind == "interval" and len(vals) == 2:
            return Interval(*vals)
        if kind == "rectangle" and len(vals) == 4:
            return Rectangle((vals[0], vals[1]), (vals[2], vals[3]))
    except ValueError as err:
        raise ConfigError(f"domain bounds not ordered: {text!r}") from err
    raise ConfigError(f"domain must be 'interval a b' or 'rectangle a b c d', got {text!r}")


def config_hash(parser: configparser.ConfigParser) -> str:
    """Hash of the normalized content; comments and layout do not count."""
    lines = []
    for sec in sorted(parser.sections()):
        for key in sorted(parser[sec]):
            lines.append(f"{sec}.{key}={' '.join(_items(parser[sec][key]))}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:12]


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"config syntax: {err}") from err

    for sec in parser.sections():
        if sec not in KNOWN:
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(parser[sec]) - KNOWN[sec]
        if extra:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(extra))}")
    if not parser.has_section("problem"):
        raise ConfigError("missing [problem] section")
    p = parser["problem"]
    for key in ("potential", "domain"):
        if not p.get(key, "").strip():
            raise ConfigError(f"[problem] {key} is required")

    def get(sec, key, conv, default):
        if not parser.has_section(sec) or key not in parser[sec]:
            return default
        raw = parser[sec][key].strip()
        try:
            return conv(raw)
        except ValueError as err:
            raise ConfigError(f"[{sec}] {key}: cannot read {raw!r}") from err

    domain = _domain(p["domain"])
    regime = p.get("regime", "auto").strip().lower()
    if regime not in REGIMES:
        raise ConfigError(f"regime must be one of {', '.join(REGIMES)}")
    hs = tuple(_floats(p.get("hs", ""), "hs"))
    if "hs" in p and not hs:
        raise ConfigError("hs empty")
    if any(not (h > 0 and math.isfinite(h)) for h in hs):
        raise ConfigError("hs must be positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("hs must be strictly decreasing")

    region = get("pseudo", "region", lambda s: tuple(_floats(s, "region")), None)
    if region is not None and (len(region) != 4 or region[0] >= region[1] or region[2] >= region[3]):
        raise ConfigError("[pseudo] region must be 're_lo re_hi im_lo im_hi' with ordered bounds")

    cfg = ExperimentConfig(
        potential=p["potential"].strip(),
        domain=domain,
        regime=regime,
        hs=hs,
        dense_cap=get("solver", "dense_cap", int, DENSE_CAP),
        shifts=tuple(get("solver", "shifts", _complexes, [])),
        tol=get("solver", "tol", float, 1e-8),
        points_per_scale=get("solver", "points_per_scale", int, 10),
        levels=get("solver", "levels", int, 2),
        method=get("solver", "method", str, "auto"),
        k_per_shift=get("solver", "k_per_shift", int, 6),
        directory=get("outputs", "directory", str, "out"),
        spectrum_h=get("spectrum", "h", float, None),
        sweep_tolerance=get("sweep", "tolerance", float, 0.05),
        pseudo=PseudoSettings(
            h=get("pseudo", "h", float, None),
            gamma_fraction=get("pseudo", "gamma_fraction", float, 0.8),
            nu_samples=get("pseudo", "nu_samples", int, 201),
            region=region,
            nx=get("pseudo", "nx", int, 40),
            ny=get("pseudo", "ny", int, 40),
        ),
        decay=DecaySettings(
            h=get("decay", "h", float, None),
            c0=get("decay", "c0", float, 1.0),
            samples=get("decay", "samples", int, 101),
            t_max_factor=get("decay", "t_max_factor", float, 10.0),
        ),
        Rs=tuple(get("gl", "rs", lambda s: _floats(s, "Rs"), [])),
        models_n=get("models", "n", int, 2000),
        hash=config_hash(parser),
    )
    if cfg.dense_cap < 1 or cfg.levels < 2 or cfg.points_per_scale < 1 or cfg.models_n < 10:
        raise ConfigError("dense_cap, points_per_scale must be positive; levels >= 2; models n >= 10")
    if cfg.method not in ("auto", "dense", "shift-invert"):
        raise ConfigError("method must be auto, dense or shift-invert")
    if not 0 < cfg.pseudo.gamma_fraction < 1:
        raise ConfigError("[pseudo] gamma_fraction must lie in (0, 1)")
    if cfg.decay.c0 <= 0 or cfg.decay.samples < 5 or cfg.decay.t_max_factor <= 0:
        raise ConfigError("[decay] needs c0 > 0, samples >= 5, t_max_factor > 0")
    if any(R <= 0 for R in cfg.Rs):
        raise ConfigError("Rs must be positive")
    try:
        cfg.profile()
    except ParseError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err
    if cfg.shifts:
        cfg.plan()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())
