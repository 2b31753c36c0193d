"""Resolvent norms, strip suprema and pseudospectrum fields."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.optimize import minimize_scalar

from .eigensolve import as_matrix, solve
from .errors import EigenvalueHitError, StripViolationError

SVD_CAP = 400
INVERSE_ITER_RTOL = 1e-8
INVERSE_ITER_MAX = 2000
NU_SAMPLES = 201
_SEED = 7


@dataclass(frozen=True)
class ResolventSample:
    z: complex
    norm: float
    method: str  # "DenseSVD" or "IterativeSmallestSingular"


def _smallest_singular_dense(M):
    s = la.svdvals(M, check_finite=False)
    return float(s[-1]), float(s[0])


def _smallest_singular_iterative(A, z):
    N = A.shape[0]
    B = (A - z * sp.identity(N, dtype=complex, format="csr")).tocsc()
    try:
        lu = sla.splu(B)
    except RuntimeError as err:
        raise EigenvalueHitError(f"A - zI is singular at z = {z}", z=[z.real, z.imag]) from err
    x = np.random.default_rng(_SEED).standard_normal(N).astype(complex)
    x /= np.linalg.norm(x)
    prev = None
    for _ in range(INVERSE_ITER_MAX):
        y = lu.solve(x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny):
            raise EigenvalueHitError(f"resolvent blew up at z = {z}", z=[z.real, z.imag])
        # ||B^-1 x|| increases monotonically to sigma_max(B^-1)
        sigma = 1.0 / ny
        x = lu.solve(y / ny, trans="H")
        x /= np.linalg.norm(x)
        if prev is not None and abs(sigma - prev) <= INVERSE_ITER_RTOL * prev:
            return float(sigma)
        prev = sigma
    return float(prev)


def resolvent_norm(op, z: complex, method: str = "auto", svd_cap: int = SVD_CAP) -> ResolventSample:
    """||(A - z)^{-1}||_2 = 1 / sigma_min(A - z)."""
    A = as_matrix(op)
    N = A.shape[0]
    z = complex(z)
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown resolvent method {method!r}")
    use_dense = method == "dense" or (method == "auto" and N <= svd_cap)
    if use_dense:
        M = A.toarray() if sp.issparse(A) else np.array(A, dtype=complex)
        M = M - z * np.eye(N)
        smin, smax = _smallest_singular_dense(M)
        if smin <= N * np.finfo(float).eps * max(smax, 1.0):
            raise EigenvalueHitError(f"z = {z} is an eigenvalue to working precision", z=[z.real, z.imag])
        return ResolventSample(z, 1.0 / smin, "DenseSVD")
    smin = _smallest_singular_iterative(sp.csr_matrix(A, dtype=complex), z)
    if smin <= N * np.finfo(float).eps:
        raise EigenvalueHitError(f"z = {z} is an eigenvalue to working precision", z=[z.real, z.imag])
    return ResolventSample(z, 1.0 / smin, "IterativeSmallestSingular")


def _default_nu_range(op):
    v = np.asarray(as_matrix(op).diagonal()).imag
    return float(v.min()) - 1.0, float(v.max()) + 1.0


@dataclass(frozen=True)
class StripResult:
    sup: float
    nu_at_sup: float
    gamma_max: float
    nus: tuple
    norms: tuple


def strip_sup(op, gamma_max: float, nu_range: Optional[Sequence[float]] = None, nu_samples: int = NU_SAMPLES,
              eigenvalues=None, refine: int = 3, threads: int = 1, **kw) -> StripResult:
    """Sup of the resolvent norm on the line Re z = gamma_max.

    By the maximum principle this bounds the half-plane Re z <= gamma_max
    (within the sampled window of Im z). ``eigenvalues`` defaults to a
    fresh solve and is used only to check the strip is eigenvalue-free.
    """
    if eigenvalues is None:
        eigenvalues = solve(op).eigenvalues
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    inside = eigenvalues[eigenvalues.real <= gamma_max]
    if inside.size:
        raise StripViolationError(
            f"{inside.size} eigenvalue(s) with Re <= {gamma_max:g}",
            eigenvalues=[[z.real, z.imag] for z in inside[np.argsort(inside.real)][:10]],
        )
    lo, hi = nu_range if nu_range is not None else _default_nu_range(op)
    nus = np.linspace(lo, hi, nu_samples)

    def norm_at(nu):
        return resolvent_norm(op, complex(gamma_max, nu), **kw).norm

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            norms = np.array(list(pool.map(norm_at, nus)))
    else:
        norms = np.array([norm_at(nu) for nu in nus])

    best_nu, best = float(nus[np.argmax(norms)]), float(norms.max())
    # local refinement around the largest samples; fixed order keeps it deterministic
    for i in np.argsort(-norms, kind="stable")[:refine]:
        a, b = nus[max(i - 1, 0)], nus[min(i + 1, nus.size - 1)]
        if b <= a:
            continue
        r = minimize_scalar(lambda nu: -norm_at(nu), bounds=(a, b), method="bounded",
                            options={"xatol": 1e-10 * max(1.0, abs(b - a))})
        if -r.fun > best:
            best, best_nu = float(-r.fun), float(r.x)
    return StripResult(best, best_nu, float(gamma_max), tuple(map(float, nus)), tuple(map(float, norms)))


@dataclass(frozen=True)
class PseudospectrumField:
    region: tuple  # (re_lo, re_hi, im_lo, im_hi)
    res: tuple  # (nx, ny)
    re: np.ndarray
    im: np.ndarray
    samples: np.ndarray  # shape (ny, nx); row-major over (im, re)

    def count_at_least(self, level: float) -> int:
        return int(np.count_nonzero(self.samples >= level))

    def level_set(self, eps: float) -> np.ndarray:
        """Mask of the eps-pseudospectrum {norm >= 1/eps}."""
        return self.samples >= 1.0 / eps


def field(op, region, nx: int, ny: int, threads: int = 1, **kw) -> PseudospectrumField:
    re_lo, re_hi, im_lo, im_hi = (float(v) for v in region)
    re = np.linspace(re_lo, re_hi, nx)
    im = np.linspace(im_lo, im_hi, ny)
    pts = [complex(a, b) for b in im for a in re]

    def sample(z):
        try:
            return resolvent_norm(op, z, **kw).norm
        except EigenvalueHitError:
            return np.inf

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(sample, pts))
    else:
        vals = [sample(z) for z in pts]
    return PseudospectrumField((re_lo, re_hi, im_lo, im_hi), (nx, ny), re, im, np.array(vals).reshape(ny, nx))


def write_field_csv(f: PseudospectrumField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "resolvent_norm"])
        for j, b in enumerate(f.im):
            for i, a in enumerate(f.re):
                w.writerow([f"{a:.17g}", f"{b:.17g}", f"{f.samples[j, i]:.17g}"])


def strip_scaling(op_builder, hs, gamma_of_h, exponent, **kw):
    """h^exponent * strip_sup for each h; ``op_builder(h)`` returns the operator."""
    out = []
    for h in hs:
        op = op_builder(h)
        r = strip_sup(op, gamma_of_h(h), **kw)
        out.append((h, r.sup, h ** exponent * r.sup))
    return out


__all__ = [
    "ResolventSample", "StripResult", "PseudospectrumField", "resolvent_norm", "strip_sup", "field",
    "write_field_csv", "strip_scaling",
]
