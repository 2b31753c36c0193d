"""Eigenvalues of assembled non-normal operators and leftmost extraction."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .discretize import AssembledOperator
from .errors import ConfigError, InstabilityError, NumericalError

log = logging.getLogger(__name__)

DENSE_CAP = 3000
DENSE_RTOL = 1e-9
TIE_RTOL = 1e-10
_V0_SEED = 20140602


def as_matrix(op):
    if isinstance(op, AssembledOperator):
        return op.matrix
    if sp.issparse(op):
        return op.tocsr()
    return np.asarray(op, dtype=complex)


def _grid_id(op):
    return op.grid.id if isinstance(op, AssembledOperator) else f"{as_matrix(op).shape[0]}"


def _norm1(A):
    if sp.issparse(A):
        return float(abs(A).sum(axis=0).max())
    return float(np.abs(A).sum(axis=0).max())


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    method: str
    grid_id: str = ""
    shifts: tuple = ()
    tol: float = 0.0
    vectors: Optional[np.ndarray] = field(default=None, repr=False)
    flags: tuple = ()
    history: tuple = ()

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        self.residuals = np.asarray(self.residuals, dtype=float)
        if self.eigenvalues.shape != self.residuals.shape:
            raise ValueError("eigenvalues and residuals differ in length")

    def __len__(self):
        return self.eigenvalues.size

    def subset(self, mask) -> "SpectrumResult":
        mask = np.asarray(mask)
        vecs = None if self.vectors is None else self.vectors[:, mask]
        return SpectrumResult(self.eigenvalues[mask], self.residuals[mask], self.method, self.grid_id,
                              self.shifts, self.tol, vecs, self.flags, self.history)

    def to_dict(self):
        return {
            "method": self.method,
            "grid_id": self.grid_id,
            "shifts": [[complex(s).real, complex(s).imag] for s in self.shifts],
            "tol": self.tol,
            "flags": list(self.flags),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "residuals": [float(r) for r in self.residuals],
        }


@dataclass(frozen=True)
class ShiftPlan:
    shifts: tuple
    k_per_shift: int = 6
    tol: float = 1e-8
    max_iterations: int = 1000

    def __post_init__(self):
        if any(complex(s).real < 0 for s in self.shifts):
            raise ConfigError("shifts must have non-negative real part")
        if not self.shifts:
            raise ConfigError("shift plan needs at least one shift")
        if self.k_per_shift < 1:
            raise ConfigError("k_per_shift must be positive")


def default_plan(op, k_per_shift=6, tol=1e-8, percentiles=(0, 25, 50, 75, 100)) -> ShiftPlan:
    """Shifts i*q on the imaginary axis at percentiles q of the potential."""
    if isinstance(op, AssembledOperator):
        v = op.potential_part
    else:
        v = np.asarray(as_matrix(op).diagonal()).imag
    qs = np.percentile(v, percentiles)
    shifts = []
    for q in qs:
        s = complex(0.0, float(q))
        if s not in shifts:
            shifts.append(s)
    return ShiftPlan(tuple(shifts), k_per_shift, tol)


def residuals(A, values, vectors) -> np.ndarray:
    """||A v - lambda v|| / ||v|| for each column, one product with A."""
    AV = A @ vectors
    R = AV - vectors * values[np.newaxis, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(vectors, axis=0)


def dense_spectrum(op, dense_cap: int = DENSE_CAP) -> SpectrumResult:
    A = as_matrix(op)
    N = A.shape[0]
    if N > dense_cap:
        raise ConfigError(f"N = {N} exceeds the dense cap {dense_cap}; use shift_invert_leftmost")
    M = A.toarray() if sp.issparse(A) else np.array(A, dtype=complex)
    w, V = la.eig(M, overwrite_a=False, check_finite=True)
    res = residuals(M, w, V)
    tol = DENSE_RTOL * max(1.0, _norm1(M))
    return SpectrumResult(w, res, "Dense", _grid_id(op), tol=tol, vectors=V)


def _factorize(A, sigma, tol):
    N = A.shape[0]
    I = sp.identity(N, dtype=complex, format="csc")
    last = None
    for attempt, s in enumerate((sigma, sigma + tol * max(1.0, abs(sigma)))):
        try:
            lu = sla.splu((A - s * I).tocsc())
            return lu, s
        except RuntimeError as err:  # exactly singular
            last = err
            log.info("factorization failed at shift %s (attempt %d)", s, attempt + 1)
    raise NumericalError(f"factorization of A - sigma I failed at shift {sigma}: {last}", shift=[sigma.real, sigma.imag])


def _arnoldi_at_shift(A, sigma, plan: ShiftPlan):
    N = A.shape[0]
    lu, s = _factorize(A, complex(sigma), plan.tol)
    k = min(plan.k_per_shift, N)
    if k >= N - 1:
        # ARPACK needs k < N - 1; a tiny problem is inverted directly
        inv = lu.solve(np.eye(N, dtype=complex))
        theta, V = la.eig(inv)
        keep = np.argsort(-np.abs(theta))[:k]
        theta, V = theta[keep], V[:, keep]
    else:
        ncv = min(N, max(4 * k, k + 2))
        opinv = sla.LinearOperator((N, N), matvec=lu.solve, dtype=complex)
        v0 = np.random.default_rng(_V0_SEED).standard_normal(N).astype(complex)
        try:
            theta, V = sla.eigs(opinv, k=k, ncv=ncv, maxiter=plan.max_iterations, v0=v0, which="LM")
        except sla.ArpackNoConvergence as err:
            theta, V = err.eigenvalues, err.eigenvectors
    good = np.abs(theta) > 0
    theta, V = theta[good], V[:, good]
    return s + 1.0 / theta, V


def shift_invert_leftmost(op, plan: Optional[ShiftPlan] = None, threads: int = 1) -> SpectrumResult:
    """Shift-and-invert Arnoldi at each shift, merged and residual-filtered."""
    A = sp.csr_matrix(as_matrix(op), dtype=complex)
    plan = plan or default_plan(op)

    def run(sigma):
        return _arnoldi_at_shift(A, sigma, plan)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, plan.shifts))
    else:
        parts = [run(s) for s in plan.shifts]

    vals = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, complex)
    vecs = np.concatenate([p[1] for p in parts], axis=1) if parts else np.zeros((A.shape[0], 0), complex)
    res = residuals(A, vals, vecs) if vals.size else np.zeros(0)

    ok = res <= plan.tol
    vals, vecs, res = vals[ok], vecs[:, ok], res[ok]
    # dedup: smaller residual wins, ties by position for determinism
    order = np.lexsort((np.arange(vals.size), res))
    kept = []
    for i in order:
        if all(abs(vals[i] - vals[j]) >= plan.tol * max(1.0, abs(vals[i])) for j in kept):
            kept.append(i)
    kept.sort(key=lambda i: (vals[i].real, vals[i].imag))
    kept = np.array(kept, dtype=int)
    flags = () if kept.size else ("no-converged-pairs",)
    return SpectrumResult(vals[kept], res[kept], "ShiftInvert", _grid_id(op), plan.shifts, plan.tol,
                          vecs[:, kept] if kept.size else None, flags)


def solve(op, dense_cap: int = DENSE_CAP, plan: Optional[ShiftPlan] = None, method: str = "auto",
          threads: int = 1) -> SpectrumResult:
    """Dense below the cap, shift-invert above it (or as forced by ``method``)."""
    N = as_matrix(op).shape[0]
    if method == "dense" or (method == "auto" and N <= dense_cap and plan is None):
        return dense_spectrum(op, dense_cap=max(dense_cap, N) if method == "dense" else dense_cap)
    if method not in ("auto", "shift-invert", "dense"):
        raise ConfigError(f"unknown eigen method {method!r}")
    return shift_invert_leftmost(op, plan, threads=threads)


def leftmost_index(values: Sequence[complex], tie_rtol: float = TIE_RTOL) -> int:
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        raise NumericalError("empty spectrum: no leftmost eigenvalue")
    re_min = values.real.min()
    tied = np.flatnonzero(values.real <= re_min + tie_rtol * max(1.0, abs(re_min)))
    best = min(tied, key=lambda i: (abs(values[i].imag), values[i].imag, values[i].real))
    return int(best)


def leftmost(spec) -> complex:
    """Eigenvalue of smallest real part; ties by smaller |Im|, then smaller Im."""
    values = spec.eigenvalues if isinstance(spec, SpectrumResult) else spec
    values = np.asarray(values, dtype=complex)
    return complex(values[leftmost_index(values)])


def default_match_tol(lam: complex) -> float:
    return 1e-4 * (1.0 + abs(lam))


def refine_filter(build: Callable[[int], object], levels: int = 2,
                  match_tol: Optional[Callable[[complex], float]] = None,
                  solver: Callable[[object], SpectrumResult] = solve) -> SpectrumResult:
    """Keep eigenvalues that persist on grids n, 2n, ..., 2^(levels-1) n.

    ``build(f)`` must return the operator on the grid refined by factor f.
    The finest-level values are returned. Raises :class:`InstabilityError`
    when the finest leftmost eigenvalue has no partner on a coarser level.
    """
    if levels < 2:
        raise ConfigError("refine_filter needs at least two levels")
    match_tol = match_tol or default_match_tol
    specs = [solver(build(2 ** k)) for k in range(levels)]
    history = tuple(leftmost(s) if len(s) else None for s in specs)
    finest = specs[-1]
    if len(finest) == 0:
        raise InstabilityError("finest level produced no eigenvalues", per_level=_fmt_hist(history))
    keep = np.ones(len(finest), dtype=bool)
    for coarse in specs[:-1]:
        if len(coarse) == 0:
            keep[:] = False
            break
        d = np.abs(finest.eigenvalues[:, None] - coarse.eigenvalues[None, :]).min(axis=1)
        tol = np.array([match_tol(z) for z in finest.eigenvalues])
        keep &= d <= tol
    i_left = leftmost_index(finest.eigenvalues)
    if not keep[i_left]:
        raise InstabilityError(
            "leftmost eigenvalue is not stable under grid refinement (under-resolved?)",
            per_level=_fmt_hist(history),
        )
    out = finest.subset(keep)
    out.history = history
    return out


def _fmt_hist(history):
    return [None if z is None else [z.real, z.imag] for z in history]
