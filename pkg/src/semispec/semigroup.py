"""Semigroup norms ||exp(-tA)||, decay-rate fits and Gearhart-Pruss envelopes."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .eigensolve import DENSE_CAP, as_matrix
from .errors import ConfigError, NumericalError

UNDERFLOW = 1e-14


def _dense(op, dense_cap):
    A = as_matrix(op)
    N = A.shape[0]
    if N > dense_cap:
        raise ConfigError(f"N = {N} exceeds the dense cap {dense_cap}; semigroup checks are dense only")
    return A.toarray() if sp.issparse(A) else np.array(A, dtype=complex)


def propagator_norm(op, t: float, dense_cap: int = DENSE_CAP) -> float:
    """Spectral norm of exp(-tA) (scaling-and-squaring Pade exponential)."""
    if t < 0:
        raise ConfigError("t must be non-negative")
    M = _dense(op, dense_cap)
    if t == 0:
        return 1.0
    E = la.expm(-t * M)
    return float(la.svdvals(E, check_finite=False)[0])


@dataclass(frozen=True)
class DecayCurve:
    ts: tuple
    norms: tuple
    op_id: str = ""


def decay_curve(op, ts: Sequence[float], dense_cap: int = DENSE_CAP, threads: int = 1) -> DecayCurve:
    """Norms at each t; exp(-tA) is built by repeated multiplication when the
    samples are equally spaced, which is both faster and exactly consistent."""
    M = _dense(op, dense_cap)
    ts = [float(t) for t in ts]
    steps = np.diff(ts)
    uniform = len(ts) > 2 and ts[0] == 0.0 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)
    if uniform:
        step = la.expm(-steps[0] * M)
        E = np.eye(M.shape[0], dtype=complex)
        norms = [1.0]
        for _ in ts[1:]:
            E = step @ E
            norms.append(float(la.svdvals(E, check_finite=False)[0]))
    else:
        def one(t):
            return 1.0 if t == 0 else float(la.svdvals(la.expm(-t * M), check_finite=False)[0])

        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                norms = list(pool.map(one, ts))
        else:
            norms = [one(t) for t in ts]
    op_id = getattr(getattr(op, "grid", None), "id", "")
    return DecayCurve(tuple(ts), tuple(norms), op_id)


def decay_rate_fit(curve: DecayCurve, window: Sequence[float]) -> float:
    """Least-squares slope of -log ||exp(-tA)|| against t inside ``window``."""
    t_lo, t_hi = window
    ts = np.asarray(curve.ts)
    ns = np.asarray(curve.norms)
    m = (ts >= t_lo) & (ts <= t_hi)
    if m.sum() < 5:
        raise ConfigError(f"need at least 5 samples in the fit window, have {int(m.sum())}")
    if np.any(ns[m] <= 0):
        raise ConfigError("norms must be positive")
    if np.any(ns[m] < UNDERFLOW):
        raise NumericalError("norms below 1e-14 inside the fit window; shrink the window",
                             window=[t_lo, t_hi])
    slope = np.polyfit(ts[m], -np.log(ns[m]), 1)[0]
    return float(slope)


def default_window(rate_guess: float):
    return 2.0 / rate_guess, 6.0 / rate_guess


@dataclass(frozen=True)
class DecayEnvelope:
    M: float
    rate: float
    M1: float
    M2: float
    resolvent_bound: float
    omega: float
    c0: float

    def __call__(self, t):
        return self.M * np.exp(-self.rate * np.asarray(t, dtype=float))

    @property
    def t_switch(self) -> float:
        """Time after which the resolvent-based piece is the active bound."""
        return self.c0 / self.omega


def gp_envelope(resolvent_bound: float, omega: float, c0: float = 1.0, ts=None):
    """Quantitative Gearhart-Pruss envelope M exp(-omega t).

    ``resolvent_bound`` bounds the resolvent on the line Re z = omega. The
    constant is the larger of the resolvent-based piece
    2 omega bound / (1 - e^{-c0}) and the contraction piece e^{2 c0}.
    Returns the envelope, and its values at ``ts`` when given.
    """
    if not omega > 0:
        raise ConfigError("omega must be positive")
    if not resolvent_bound > 0:
        raise ConfigError("resolvent_bound must be positive")
    if not c0 > 0:
        raise ConfigError("c0 must be positive")
    M1 = 2.0 * omega * resolvent_bound / (1.0 - math.exp(-c0))
    M2 = math.exp(2.0 * c0)
    env = DecayEnvelope(max(M1, M2), omega, M1, M2, resolvent_bound, omega, c0)
    if ts is None:
        return env
    return env, env(ts)


def write_decay_csv(curve: DecayCurve, envelope: Optional[DecayEnvelope], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "norm", "envelope"])
        for t, n in zip(curve.ts, curve.norms):
            e = "" if envelope is None else f"{float(envelope(t)):.17g}"
            w.writerow([f"{t:.17g}", f"{n:.17g}", e])
