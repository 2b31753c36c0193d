"""Finite-difference assembly of -h^2 Laplacian + iV with Dirichlet conditions.

Nodes are interior grid points only; boundary rows are eliminated. In 2D the
unknown for node (ix, iy) sits at row ``ix * ny + iy`` (x index slowest), i.e.
the C-order ravel of an ``(nx, ny)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from . import expr as ex
from .errors import InfeasibleResolutionError
from .potentials import Domain, Interval, PotentialProfile, Rectangle

N_MAX_1D = 4000
N_MAX_2D = 250 ** 2
EXPONENTS = {"Airy": 2.0 / 3.0, "Morse": 0.5, "Model": 0.0}


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + self.spacing * np.arange(1, self.n + 1)

    def refined(self, factor: int) -> "Axis":
        return Axis(self.lo, self.hi, self.n * factor)


@dataclass(frozen=True)
class Grid:
    axes: tuple

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def N(self) -> int:
        return math.prod(a.n for a in self.axes)

    @property
    def spacings(self):
        return tuple(a.spacing for a in self.axes)

    def refined(self, factor: int) -> "Grid":
        return Grid(tuple(a.refined(factor) for a in self.axes))

    def mesh(self):
        """Node coordinates, flattened in row order."""
        if self.dim == 1:
            return (self.axes[0].nodes,)
        X, Y = np.meshgrid(self.axes[0].nodes, self.axes[1].nodes, indexing="ij")
        return X.ravel(), Y.ravel()

    @property
    def id(self) -> str:
        return "x".join(str(a.n) for a in self.axes)

    @classmethod
    def for_domain(cls, domain: Domain, n) -> "Grid":
        ns = (n,) * domain.dim if np.isscalar(n) else tuple(n)
        return cls(tuple(Axis(lo, hi, int(k)) for (lo, hi), k in zip(domain.bounds, ns)))


@dataclass(frozen=True)
class ResolutionRule:
    regime: str = "Airy"
    points_per_scale: int = 10

    def __post_init__(self):
        if self.regime not in EXPONENTS:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.points_per_scale < 1:
            raise ValueError("points_per_scale must be positive")

    def max_spacing(self, h: float) -> float:
        return h ** EXPONENTS[self.regime] / self.points_per_scale


def default_n_max(dim: int) -> int:
    return N_MAX_1D if dim == 1 else N_MAX_2D


def _required_grid(h, domain, rule):
    dmax = rule.max_spacing(h)
    # the tiny slack keeps exact ratios such as 3/0.01 from rounding up
    return Grid(tuple(Axis(lo, hi, max(1, math.ceil((hi - lo) / dmax - 1e-9) - 1)) for lo, hi in domain.bounds))


def grid_for(h: float, domain: Domain, rule: ResolutionRule = ResolutionRule(),
             n_max: Optional[int] = None, refine_factor: int = 1) -> Grid:
    """Coarsest grid resolving the regime's length scale at ``h``.

    ``refine_factor`` is the ratio between the finest level that will be
    built from this grid and the grid itself; the cap applies to that level.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    n_max = default_n_max(domain.dim) if n_max is None else n_max
    grid = _required_grid(h, domain, rule)
    if grid.refined(refine_factor).N <= n_max:
        return grid
    raise InfeasibleResolutionError(
        f"h = {h:g} needs {grid.refined(refine_factor).N} unknowns, above the cap {n_max}",
        smallest_feasible_h=smallest_feasible_h(domain, rule, n_max, refine_factor),
        h=h,
    )


def smallest_feasible_h(domain: Domain, rule: ResolutionRule, n_max: int, refine_factor: int = 1) -> float:
    if rule.regime == "Model":
        return math.nan
    feasible = lambda h: _required_grid(h, domain, rule).refined(refine_factor).N <= n_max
    hi = 1.0
    while not feasible(hi):
        hi *= 2.0
    lo = hi
    while feasible(lo) and lo > 1e-300:
        lo /= 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        if hi / lo - 1.0 < 1e-12:
            break
    return hi


@dataclass(frozen=True)
class AssembledOperator:
    """Sparse CSR matrix ``L + iD`` with its grid.

    ``L`` is the scaled Dirichlet Laplacian (real SPD) and ``D`` the diagonal
    of potential values at the nodes.
    """

    matrix: sp.csr_matrix
    grid: Grid
    h: float
    potential_tag: str
    model_tag: Optional[str] = None
    potential_values: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def laplacian_part(self) -> sp.csr_matrix:
        return self.matrix.real.tocsr()

    @property
    def potential_part(self) -> np.ndarray:
        return np.asarray(self.matrix.diagonal().imag)

    def v_range(self):
        v = self.potential_part
        return float(v.min()), float(v.max())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _laplacian_1d(axis: Axis) -> sp.csr_matrix:
    n, d = axis.n, axis.spacing
    main = np.full(n, 2.0 / d ** 2)
    off = np.full(n - 1, -1.0 / d ** 2)
    return sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="csr")


def dirichlet_laplacian(grid: Grid) -> sp.csr_matrix:
    """Negative Laplacian, second-order central differences."""
    if grid.dim == 1:
        return _laplacian_1d(grid.axes[0])
    ax, ay = grid.axes
    Lx, Ly = _laplacian_1d(ax), _laplacian_1d(ay)
    return (sp.kron(Lx, sp.identity(ay.n)) + sp.kron(sp.identity(ax.n), Ly)).tocsr()


def _assemble(grid, values, h, tag, model_tag=None):
    L = dirichlet_laplacian(grid)
    A = (h * h) * L.astype(complex) + sp.diags(1j * values)
    A = A.tocsr()
    A.sort_indices()
    return AssembledOperator(A, grid, float(h), tag, model_tag, np.asarray(values, dtype=float))


def assemble_interval(grid: Grid, profile: PotentialProfile, h: float) -> AssembledOperator:
    if grid.dim != 1:
        raise ValueError("assemble_interval needs a 1D grid")
    (x,) = grid.mesh()
    return _assemble(grid, profile.value(x), h, profile.tag)


def assemble_rectangle(grid: Grid, profile: PotentialProfile, h: float) -> AssembledOperator:
    if grid.dim != 2:
        raise ValueError("assemble_rectangle needs a 2D grid")
    X, Y = grid.mesh()
    return _assemble(grid, profile.value(X, Y), h, profile.tag)


def assemble(grid: Grid, profile: PotentialProfile, h: float) -> AssembledOperator:
    return assemble_interval(grid, profile, h) if grid.dim == 1 else assemble_rectangle(grid, profile, h)


@dataclass(frozen=True)
class HalfLineAiry:
    J: float = 1.0
    L: float = 30.0

    def domain(self):
        return Interval(0.0, self.L)

    def potential(self):
        return PotentialProfile.from_expr(ex.Mul(ex.Num(float(self.J)), ex.Var("x")), 1)

    @property
    def tag(self):
        return f"HalfLineAiry(J={self.J:g},L={self.L:g})"


@dataclass(frozen=True)
class Oscillator:
    alpha: float = 1.0
    L: float = 12.0

    def domain(self):
        return Interval(-self.L, self.L)

    def potential(self):
        return PotentialProfile.from_expr(ex.Mul(ex.Num(float(self.alpha)), ex.Pow(ex.Var("x"), 2)), 1)

    @property
    def tag(self):
        return f"Oscillator(alpha={self.alpha:g},L={self.L:g})"


@dataclass(frozen=True)
class HalfPlane:
    """-Laplacian + iJ(sin(theta) x1 + cos(theta) x2) on (-Lx/2, Lx/2) x (0, Ly)."""

    J: float = 1.0
    theta: float = 0.0
    Lx: float = 20.0
    Ly: float = 20.0

    def domain(self):
        return Rectangle((-self.Lx / 2, self.Lx / 2), (0.0, self.Ly))

    def potential(self):
        s, c = math.sin(self.theta), math.cos(self.theta)
        e = ex.simplify(ex.Add(ex.Mul(ex.Num(self.J * s), ex.Var("x")), ex.Mul(ex.Num(self.J * c), ex.Var("y"))))
        return PotentialProfile.from_expr(e, 2)

    @property
    def tag(self):
        return f"HalfPlane(J={self.J:g},theta={self.theta:g},Lx={self.Lx:g},Ly={self.Ly:g})"


ModelKind = Union[HalfLineAiry, Oscillator, HalfPlane]


def assemble_model(kind: ModelKind, n) -> AssembledOperator:
    """Truncated model operator with h = 1 and Dirichlet walls on all sides."""
    if getattr(kind, "L", 1.0) <= 0 or getattr(kind, "Lx", 1.0) <= 0 or getattr(kind, "Ly", 1.0) <= 0:
        raise ValueError("truncation lengths must be positive")
    domain = kind.domain()
    grid = Grid.for_domain(domain, n)
    op = assemble(grid, kind.potential(), 1.0)
    return AssembledOperator(op.matrix, op.grid, 1.0, op.potential_tag, kind.tag, op.potential_values)


def dump_matrix(op: AssembledOperator, path) -> None:
    """Write the matrix as 1-indexed coordinate text (row col re im per line)."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket-compatible\n")
        fh.write(f"{op.N} {op.N} {coo.nnz}\n")
        for k in order:
            v = coo.data[k]
            fh.write(f"{coo.row[k] + 1} {coo.col[k] + 1} {v.real:.17g} {v.imag:.17g}\n")


def load_matrix(path) -> sp.csr_matrix:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket-compatible"):
            raise ValueError("missing matrix dump header")
        nrow, ncol, nnz = (int(t) for t in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 4))
    rows = data[:, 0].astype(int) - 1
    cols = data[:, 1].astype(int) - 1
    return sp.csr_matrix((data[:, 2] + 1j * data[:, 3], (rows, cols)), shape=(nrow, ncol))
