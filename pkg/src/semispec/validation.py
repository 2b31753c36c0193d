"""Discretized model operators checked against their closed-form spectra."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .discretize import Grid, HalfLineAiry, Oscillator, assemble, assemble_model
from .eigensolve import ShiftPlan, dense_spectrum, shift_invert_leftmost
from .models import davies_spectrum, halfline_airy_spectrum, quad_tensor_spectrum
from .potentials import PotentialProfile, Rectangle

AIRY_TOL = 1e-4
DAVIES_TOL = 1e-6
TENSOR_TOL = 5e-3
CONJUGATION_TOL = 1e-8
TENSOR_LAMBDAS = (1.0, 2.0)
TENSOR_HALF_WIDTH = 5.0
TENSOR_N = 200


@dataclass(frozen=True)
class ValidationRow:
    model: str
    index: int
    oracle: complex
    discrete: complex
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def airy_branch(eigenvalues, J: float, L: float) -> np.ndarray:
    """Eigenvalues attached to the wall at 0, sorted by real part.

    The truncation wall at x = L carries a mirrored family centred near
    Im = J L; it is discarded by keeping Im < J L / 2.
    """
    ev = np.asarray(eigenvalues, dtype=complex)
    ev = ev[ev.imag < J * L / 2]
    return ev[np.argsort(ev.real, kind="stable")]


def by_real(eigenvalues) -> np.ndarray:
    ev = np.asarray(eigenvalues, dtype=complex)
    return ev[np.lexsort((ev.imag, ev.real))]


def _rows(model, oracle, discrete, tol):
    return [ValidationRow(model, k, complex(o), complex(d), float(abs(o - d)), tol)
            for k, (o, d) in enumerate(zip(oracle, discrete))]


def validate_airy(n: int = 2000, J: float = 1.0, L: float = 30.0, k: int = 3, tol: float = AIRY_TOL):
    kind = HalfLineAiry(J, L)
    spec = dense_spectrum(assemble_model(kind, n), dense_cap=max(n, 1))
    disc = airy_branch(spec.eigenvalues, J, L)[:k]
    return _rows(kind.tag, halfline_airy_spectrum(J, k).eigenvalues, disc, tol)


def validate_davies(n: int = 2000, L: float = 12.0, k: int = 5, tol: float = DAVIES_TOL,
                    conj_tol: float = CONJUGATION_TOL):
    """First ``k`` levels for alpha = 1, plus the alpha = -1 conjugation check."""
    plus = dense_spectrum(assemble_model(Oscillator(1.0, L), n), dense_cap=max(n, 1))
    minus = dense_spectrum(assemble_model(Oscillator(-1.0, L), n), dense_cap=max(n, 1))
    disc = by_real(plus.eigenvalues)[:k]
    rows = _rows(Oscillator(1.0, L).tag, davies_spectrum(1.0, k - 1).eigenvalues, disc, tol)
    conj = by_real(np.conj(minus.eigenvalues))[:k]
    for j, (a, b) in enumerate(zip(disc, conj)):
        rows.append(ValidationRow("conjugation alpha=-1", j, complex(a), complex(np.conj(b)),
                                  float(abs(a - b)), conj_tol))
    return rows


def validate_tensor(n: int = TENSOR_N, lambdas=TENSOR_LAMBDAS, half_width: float = TENSOR_HALF_WIDTH,
                    k: int = 3, tol: float = TENSOR_TOL):
    """-Laplacian + i(l1 x^2 + l2 y^2) on a square against sums of Davies levels."""
    l1, l2 = lambdas
    profile = PotentialProfile.from_text(f"{l1!r}*x^2 + {l2!r}*y^2", 2)
    square = Rectangle((-half_width, half_width), (-half_width, half_width))
    op = assemble(Grid.for_domain(square, n), profile, 1.0)
    spec = shift_invert_leftmost(op, ShiftPlan((0j,), k_per_shift=max(2 * k, 6), tol=1e-10))
    disc = by_real(spec.eigenvalues)[:k]
    oracle = quad_tensor_spectrum(lambdas, k).eigenvalues[:k]
    return _rows(f"QuadTensor(lambdas={l1:g},{l2:g};n={n})", oracle, disc, tol)


def validate_models(n: int = 2000, tensor_n: Optional[int] = None):
    return validate_airy(n) + validate_davies(n) + validate_tensor(tensor_n or TENSOR_N)


def write_validation_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "index", "oracle_re", "oracle_im", "discrete_re", "discrete_im",
                    "abs_error", "tolerance", "pass"])
        for r in rows:
            w.writerow([r.model, r.index, f"{r.oracle.real:.17g}", f"{r.oracle.imag:.17g}",
                        f"{r.discrete.real:.17g}", f"{r.discrete.imag:.17g}", f"{r.error:.17g}",
                        f"{r.tolerance:.17g}", "true" if r.passed else "false"])
