"""Potential profiles: derivatives, critical points, boundary data, predicted limits."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import expr as ex
from .errors import RegimeError

DEGENERACY_RTOL = 1e-8
MERGE_RTOL = 1e-6
BOUNDARY_MARGIN_RTOL = 1e-3
CLASSIFY_RTOL = 1e-6
J_POSITIVITY_TOL = 1e-8
LEVEL_TIE_TOL = 1e-8
KAPPA_TIE_RTOL = 1e-8


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"interval bounds must satisfy a < b, got ({self.a}, {self.b})")

    dim = 1

    @property
    def bounds(self):
        return ((self.a, self.b),)

    @property
    def diameter(self):
        return self.b - self.a


@dataclass(frozen=True)
class Rectangle:
    x: tuple
    y: tuple

    def __post_init__(self):
        for lo, hi in (self.x, self.y):
            if not lo < hi:
                raise ValueError(f"rectangle bounds must be ordered, got ({lo}, {hi})")

    dim = 2

    @property
    def bounds(self):
        return (tuple(self.x), tuple(self.y))

    @property
    def diameter(self):
        return math.hypot(self.x[1] - self.x[0], self.y[1] - self.y[0])


Domain = Union[Interval, Rectangle]


@dataclass(frozen=True)
class PotentialProfile:
    """A potential together with its symbolic gradient and Hessian."""

    expr: ex.Expr
    dim: int
    grad: tuple
    hess: tuple
    text: str = ""

    @classmethod
    def from_expr(cls, e: ex.Expr, dim: int, text: str = "") -> "PotentialProfile":
        names = ex.VARIABLES[:dim]
        if dim == 1 and "y" in ex.free_variables(e):
            raise ValueError("y used in a 1D profile")
        grad = tuple(ex.differentiate(e, v) for v in names)
        hess = tuple(tuple(ex.differentiate(g, v) for v in names) for g in grad)
        return cls(e, dim, grad, hess, text or str(e))

    @classmethod
    def from_text(cls, text: str, dim: int) -> "PotentialProfile":
        return cls.from_expr(ex.parse(text, dim), dim, text)

    def scaled(self, factor: float) -> "PotentialProfile":
        return PotentialProfile.from_expr(ex.simplify(ex.Mul(ex.Num(float(factor)), self.expr)), self.dim)

    def value(self, x, y=None):
        return ex.evaluate_array(self.expr, x, y)

    def gradient(self, point) -> np.ndarray:
        p = _pt(point, self.dim)
        return np.array([float(ex.evaluate(g, *p)) for g in self.grad])

    def hessian(self, point) -> np.ndarray:
        p = _pt(point, self.dim)
        return np.array([[float(ex.evaluate(h, *p)) for h in row] for row in self.hess])

    @property
    def tag(self):
        return self.text


def _pt(point, dim):
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if p.size != dim:
        raise ValueError(f"expected a point with {dim} coordinates")
    return (p[0], p[1]) if dim == 2 else (p[0], 0.0)


def parse_potential(text: str, dim: int) -> ex.Expr:
    return ex.parse(text, dim)


def differentiate(e: ex.Expr, var: str) -> ex.Expr:
    return ex.differentiate(e, var)


@dataclass(frozen=True)
class CriticalPoint:
    location: tuple
    hess_eigenvalues: tuple
    kappa: float
    level: float
    degenerate: bool


@dataclass
class CriticalPointSet:
    """Result of the multi-start Newton search.

    Iterating yields the interior critical points; ``boundary`` holds roots
    lying within the boundary margin and ``flagged_cells`` seed cells where
    the gradient changes sign but Newton found no root.
    """

    points: list
    boundary: list = field(default_factory=list)
    flagged_cells: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]


def kappa_of(hess_eigenvalues: Sequence[float]) -> float:
    """Sum of square roots of the absolute Hessian eigenvalues."""
    lam = list(hess_eigenvalues)
    if not lam:
        raise ValueError("kappa_of needs at least one eigenvalue")
    return float(sum(math.sqrt(abs(v)) for v in lam))


def _annotate(profile, x, hess_scale):
    """``hess_scale`` is the Hessian norm typical of the domain; a per-point
    norm would make the degeneracy ratio identically 1 in one dimension."""
    H = profile.hessian(x)
    lam = np.linalg.eigvalsh(0.5 * (H + H.T))
    degenerate = hess_scale == 0.0 or bool(np.any(np.abs(lam) < DEGENERACY_RTOL * hess_scale))
    return CriticalPoint(
        location=tuple(float(v) for v in x),
        hess_eigenvalues=tuple(float(v) for v in lam),
        kappa=kappa_of(lam),
        level=float(profile.value(*x) if profile.dim == 2 else profile.value(x[0])),
        degenerate=degenerate,
    )


def _newton(profile, x0, max_iter=100):
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        g = profile.gradient(x)
        H = profile.hessian(x)
        if _is_root(g, H, x):
            return _polish(profile, x, g)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        if not np.all(np.isfinite(step)) or not np.any(step):
            return None
        x = x - step
        if np.linalg.norm(x) > 1e12:
            return None
    g = profile.gradient(x)
    return x if _is_root(g, profile.hessian(x), x) else None


def _polish(profile, x, g, steps=100):
    """Extra Newton steps while the gradient keeps shrinking.

    Nondegenerate roots stop after one or two steps at roundoff level;
    degenerate ones converge only linearly and need the longer run to get
    close enough for the degeneracy test.
    """
    for _ in range(steps):
        try:
            y = x - np.linalg.solve(profile.hessian(x), g)
        except np.linalg.LinAlgError:
            break
        gy = profile.gradient(y)
        if not np.all(np.isfinite(y)) or np.linalg.norm(gy) >= np.linalg.norm(g):
            break
        x, g = y, gy
    return x


def _is_root(g, H, x):
    bound = 1e-10 * (1.0 + np.linalg.norm(H, 2) * np.linalg.norm(x))
    return np.linalg.norm(g) <= bound


def find_critical_points(profile: PotentialProfile, domain: Domain, seeds_per_axis: int = 16) -> CriticalPointSet:
    """Multi-start Newton on grad V = 0 from a uniform seed grid."""
    if seeds_per_axis < 8:
        raise ValueError("seeds_per_axis must be at least 8")
    if profile.dim != domain.dim:
        raise ValueError("profile and domain dimensions differ")
    bounds = domain.bounds
    diam = domain.diameter
    merge = MERGE_RTOL * diam
    margin = BOUNDARY_MARGIN_RTOL * diam

    axes = [np.linspace(lo, hi, seeds_per_axis) for lo, hi in bounds]
    roots = []
    for seed in itertools.product(*axes):
        r = _newton(profile, seed)
        if r is None:
            continue
        if any(r[k] < lo - margin or r[k] > hi + margin for k, (lo, hi) in enumerate(bounds)):
            continue
        if any(np.linalg.norm(r - q) <= merge for q in roots):
            continue
        roots.append(r)
    # deterministic ordering independent of seed traversal
    roots.sort(key=lambda r: tuple(r))

    hess_scale = max(np.linalg.norm(profile.hessian(p), 2) for p in itertools.product(*axes))
    interior, boundary = [], []
    for r in roots:
        dist = min(min(r[k] - lo, hi - r[k]) for k, (lo, hi) in enumerate(bounds))
        (interior if dist > margin else boundary).append(_annotate(profile, r, hess_scale))

    flagged = []
    for cell in _sign_change_cells(profile, axes):
        lo_c, hi_c = cell
        if not any(all(lo_c[k] - merge <= r[k] <= hi_c[k] + merge for k in range(len(bounds))) for r in roots):
            flagged.append(cell)
    return CriticalPointSet(interior, boundary, flagged)


def _sign_change_cells(profile, axes):
    dim = len(axes)
    cells = []
    for idx in itertools.product(*(range(len(a) - 1) for a in axes)):
        lo = tuple(axes[k][i] for k, i in enumerate(idx))
        hi = tuple(axes[k][i + 1] for k, i in enumerate(idx))
        corners = list(itertools.product(*zip(lo, hi)))
        grads = np.array([profile.gradient(c) for c in corners])
        if all(grads[:, k].min() <= 0.0 <= grads[:, k].max() for k in range(dim)):
            cells.append((lo, hi))
    return cells


@dataclass(frozen=True)
class BoundarySample:
    point: tuple
    edge: str
    kind: str  # "perp", "parallel" or "oblique"
    grad_norm: float
    tangential: float
    normal: float


@dataclass(frozen=True)
class BoundaryData:
    dim: int
    endpoint_gradients: tuple = ()
    J: Optional[float] = None
    samples: tuple = ()
    J_m: Optional[float] = None

    def edge_kinds(self):
        """Map edge name to the set of sample classifications on it."""
        out = {}
        for s in self.samples:
            out.setdefault(s.edge, set()).add(s.kind)
        return out


def boundary_data(profile: PotentialProfile, domain: Domain, edge_samples: int = 33) -> BoundaryData:
    """Gradient data on the boundary.

    In 1D this is J = min(|V'(a)|, |V'(b)|). On a rectangle each edge is
    sampled and every sample classified as perpendicular (gradient along
    the normal), parallel (gradient along the edge) or oblique.
    """
    if profile.dim != domain.dim:
        raise ValueError("profile and domain dimensions differ")
    if domain.dim == 1:
        ga = abs(profile.gradient([domain.a])[0])
        gb = abs(profile.gradient([domain.b])[0])
        J = min(ga, gb)
        if J <= J_POSITIVITY_TOL:
            raise RegimeError("gradient vanishes at the boundary (critical point on the boundary)",
                              endpoint_gradients=[ga, gb])
        return BoundaryData(dim=1, endpoint_gradients=(float(ga), float(gb)), J=float(J), J_m=float(J))

    (x0, x1), (y0, y1) = domain.bounds
    # interior points of each edge; corners have no well-defined normal
    tx = np.linspace(x0, x1, edge_samples + 2)[1:-1]
    ty = np.linspace(y0, y1, edge_samples + 2)[1:-1]
    edges = {
        "left": ([(x0, t) for t in ty], (-1.0, 0.0)),
        "right": ([(x1, t) for t in ty], (1.0, 0.0)),
        "bottom": ([(t, y0) for t in tx], (0.0, -1.0)),
        "top": ([(t, y1) for t in tx], (0.0, 1.0)),
    }
    samples = []
    for name, (points, normal) in edges.items():
        n = np.array(normal)
        tangent = np.array([-n[1], n[0]])
        for p in points:
            g = profile.gradient(p)
            gn = float(np.linalg.norm(g))
            if gn <= J_POSITIVITY_TOL:
                raise RegimeError("gradient vanishes on the boundary", point=list(p), edge=name)
            tang = abs(float(g @ tangent))
            norm_c = abs(float(g @ n))
            if tang <= CLASSIFY_RTOL * gn:
                kind = "perp"
            elif norm_c <= CLASSIFY_RTOL * gn:
                kind = "parallel"
            else:
                kind = "oblique"
            samples.append(BoundarySample(tuple(float(v) for v in p), name, kind, gn, tang, norm_c))
    perp = [s.grad_norm for s in samples if s.kind == "perp"]
    return BoundaryData(dim=2, samples=tuple(samples), J_m=min(perp) if perp else None)


@dataclass(frozen=True)
class PredictedAsymptote:
    regime: str  # "NoCriticalPoint" or "Morse"
    h_exponent: Fraction
    prefactor: float
    imag_center: Optional[float] = None
    lower_bound_only: bool = False
    warnings: tuple = ()

    @property
    def exponent(self) -> float:
        return float(self.h_exponent)


def predicted_limit(profile: PotentialProfile, domain: Domain, seeds_per_axis: int = 16) -> PredictedAsymptote:
    """Theoretical leading behaviour of the smallest real part of the spectrum."""
    from .models import airy_zeros

    cps = find_critical_points(profile, domain, seeds_per_axis)
    if cps.boundary:
        raise RegimeError("critical point on or near the boundary",
                          points=[list(c.location) for c in cps.boundary])
    if cps.flagged_cells:
        raise RegimeError("Newton failed to converge in gradient sign-change cells",
                          cells=[list(map(list, c)) for c in cps.flagged_cells])

    if len(cps) == 0:
        bd = boundary_data(profile, domain)
        mu1 = float(abs(airy_zeros(1).zeros[0]))
        if domain.dim == 1:
            return PredictedAsymptote("NoCriticalPoint", Fraction(2, 3), mu1 * bd.J ** (2 / 3) / 2)
        if bd.J_m is None:
            return PredictedAsymptote("NoCriticalPoint", Fraction(2, 3), math.inf, lower_bound_only=True,
                                      warnings=("no perpendicular boundary points: inf Re grows faster than h^(2/3)",))
        return PredictedAsymptote("NoCriticalPoint", Fraction(2, 3), mu1 * bd.J_m ** (2 / 3) / 2,
                                  lower_bound_only=True)

    bad = [c for c in cps if c.degenerate]
    if bad:
        raise RegimeError("degenerate critical point: potential is not Morse",
                          points=[list(c.location) for c in bad])
    kappa = min(c.kappa for c in cps)
    best = [c for c in cps if math.isclose(c.kappa, kappa, rel_tol=KAPPA_TIE_RTOL, abs_tol=1e-14)]
    warnings = []
    for c1, c2 in itertools.combinations(best, 2):
        if abs(c1.level - c2.level) <= LEVEL_TIE_TOL * (1.0 + abs(c1.level)):
            warnings.append(f"resonance: kappa-minimizing points {c1.location} and {c2.location} share level {c1.level:g}")
    return PredictedAsymptote("Morse", Fraction(1), kappa / 2, imag_center=best[0].level, warnings=tuple(warnings))
