"""Closed-form spectra and decay envelopes of the model operators.

These are the oracles the discretized operators are checked against:

* complex Airy operator on the half-line, ``-d^2/dx^2 + iJx``, eigenvalues
  ``e^{i pi/3} |mu_j| J^{2/3}`` with ``mu_j`` the zeros of Ai;
* the complex harmonic (Davies) oscillator ``-d^2/dx^2 + i alpha x^2`` and
  tensor sums of it;
* the half-plane semigroup bound ``exp(-(n-1) t^3 / 12)``;
* the critical current of the linearized Ginzburg-Landau problem.

The Airy function is evaluated from its Maclaurin series so the oracles do
not depend on a special-function library.
"""

from __future__ import annotations

import cmath
import decimal
import functools
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError

AIRY_WINDOW = 12.0
AIRY_MAX_ZEROS = 8
ZERO_TOL = 1e-12

# Lanczos approximation, g = 7, n = 9 (Numerical Recipes / Godfrey coefficients)
_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(z: float) -> float:
    """Gamma function for real z via the Lanczos approximation."""
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * lanczos_gamma(1.0 - z))
    z -= 1.0
    x = _LANCZOS_COEF[0]
    for i in range(1, _LANCZOS_G + 2):
        x += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * x


# Ai(0) and -Ai'(0)
AIRY_C1 = 1.0 / (3.0 ** (2.0 / 3.0) * lanczos_gamma(2.0 / 3.0))
AIRY_C2 = 1.0 / (3.0 ** (1.0 / 3.0) * lanczos_gamma(1.0 / 3.0))


def _series_terms(offset):
    """Coefficient recurrence of the basis series of y'' = x y.

    ``offset`` 0 gives f = 1 + x^3/3! + 1*4 x^6/6! + ..., offset 1 gives
    g = x + 2 x^4/4! + 2*5 x^7/7! + ...; yields (power, coefficient).
    """
    m = offset
    c = decimal.Decimal(1)
    while True:
        yield m, c
        c = c / ((m + 2) * (m + 3))
        m += 3


def _series(offset, x, derivative):
    # Terms alternate and grow to ~exp(2/3 |x|^{3/2}) before decaying; summing
    # in 50-digit decimal keeps the cancellation error far below 1e-16.
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        X = decimal.Decimal(x)
        total = decimal.Decimal(0)
        for m, c in _series_terms(offset):
            if m < derivative:
                continue
            fall = 1
            for j in range(derivative):
                fall *= m - j
            power = m - derivative
            term = c * fall * (X ** power if power else 1)
            total += term
            if abs(term) <= decimal.Decimal("1e-18") * abs(total):
                break
        return float(total)


def airy_ai(x: float, derivative: int = 0) -> float:
    """Ai(x) (or its first/second derivative) from the Maclaurin series.

    Valid for |x| <= 12. On the negative half of the window the result is
    accurate to double precision; for large positive x the true value is
    exponentially small while the two basis series are large, so only
    absolute accuracy (about 1e-16 times f(x)) is retained.
    """
    x = float(x)
    if abs(x) > AIRY_WINDOW:
        raise ConfigError(f"airy_ai: |x| = {abs(x)} outside the series window |x| <= {AIRY_WINDOW}")
    if derivative not in (0, 1, 2):
        raise ValueError("derivative must be 0, 1 or 2")
    return AIRY_C1 * _series(0, x, derivative) - AIRY_C2 * _series(1, x, derivative)


@dataclass(frozen=True)
class AiryZeros:
    zeros: tuple
    count: int
    tolerance: float


def _bisect_zero(lo, hi, flo, tol):
    while True:
        mid = 0.5 * (lo + hi)
        fm = airy_ai(mid)
        if abs(fm) <= tol * 1e-3 or mid in (lo, hi):
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid


@functools.lru_cache(maxsize=None)
def _zeros_cached(k):
    step = 0.05
    zeros = []
    right = 0.0
    f_right = airy_ai(right)
    while len(zeros) < k:
        left = round(right - step, 12)
        if left < -AIRY_WINDOW:
            raise ConfigError(f"only {len(zeros)} Airy zeros inside [-{AIRY_WINDOW}, 0]")
        f_left = airy_ai(left)
        if f_left == 0.0:
            zeros.append(left)
        elif (f_left < 0) != (f_right < 0):
            zeros.append(_bisect_zero(left, right, f_left, ZERO_TOL))
        right, f_right = left, f_left
    return tuple(zeros)


def airy_zeros(k: int) -> AiryZeros:
    """First ``k`` zeros of Ai (all negative, mu_1 rightmost) by bisection."""
    if not 1 <= k <= AIRY_MAX_ZEROS:
        raise ConfigError(f"airy_zeros: k must lie in [1, {AIRY_MAX_ZEROS}], got {k}")
    zs = _zeros_cached(k)
    worst = max(abs(airy_ai(z)) for z in zs)
    if worst > ZERO_TOL:
        raise ArithmeticError(f"Airy zero refinement stalled at |Ai| = {worst:.3g}")
    return AiryZeros(zeros=zs, count=k, tolerance=ZERO_TOL)


def mu1() -> float:
    """|mu_1|, magnitude of the rightmost Airy zero."""
    return abs(airy_zeros(1).zeros[0])


@dataclass(frozen=True)
class ModelSpectrum:
    eigenvalues: tuple
    min_real: float
    source: str


def _spectrum(values, source):
    values = sorted(values, key=lambda z: (z.real, abs(z.imag), z.imag))
    return ModelSpectrum(tuple(values), min(z.real for z in values), source)


def halfline_airy_spectrum(J: float, k: int) -> ModelSpectrum:
    """Eigenvalues of the Dirichlet complex Airy operator on the half-line."""
    if not J > 0:
        raise ConfigError("J must be positive")
    zs = airy_zeros(k).zeros
    rot = cmath.exp(1j * math.pi / 3)
    vals = [rot * abs(m) * J ** (2.0 / 3.0) for m in zs]
    return ModelSpectrum(tuple(vals), abs(zs[0]) * J ** (2.0 / 3.0) / 2.0, "Airy-halfline")


def davies_spectrum(alpha: float, kmax: int) -> ModelSpectrum:
    """Eigenvalues (2k+1) sqrt|alpha| e^{+-i pi/4}, k = 0..kmax."""
    if alpha == 0:
        raise ConfigError("alpha must be nonzero")
    if kmax < 0:
        raise ConfigError("kmax must be non-negative")
    rot = cmath.exp(1j * math.copysign(1.0, alpha) * math.pi / 4)
    vals = [(2 * k + 1) * math.sqrt(abs(alpha)) * rot for k in range(kmax + 1)]
    return ModelSpectrum(tuple(vals), vals[0].real, "Davies")


def quad_tensor_spectrum(lambdas: Sequence[float], kmax: int) -> ModelSpectrum:
    """Spectrum of -Laplacian + i sum_j lambda_j x_j^2 as sums of Davies spectra."""
    lambdas = list(lambdas)
    if not lambdas:
        raise ConfigError("need at least one lambda")
    if any(l == 0 for l in lambdas):
        raise ConfigError("all lambda_j must be nonzero")
    factors = [davies_spectrum(l, kmax).eigenvalues for l in lambdas]
    vals = [sum(combo) for combo in itertools.product(*factors)]
    # the all-ground-state sum attains the minimum real part
    min_real = sum(math.sqrt(abs(l) / 2.0) for l in lambdas)
    spec = _spectrum(vals, "QuadTensor")
    return ModelSpectrum(spec.eigenvalues, min_real, "QuadTensor")


def halfplane_decay_envelope(t: float, n: int = 2) -> float:
    """Upper bound exp(-(n-1) t^3 / 12) on the half-space semigroup norm."""
    if t < 0:
        raise ConfigError("t must be non-negative")
    if n < 2:
        raise ConfigError("n must be at least 2")
    return math.exp(-(n - 1) * t ** 3 / 12.0)


@dataclass(frozen=True)
class GLStability:
    J_c: float
    stable: bool
    J_m: Optional[float] = None

    @property
    def predicted_rate(self) -> Optional[float]:
        """Decay rate (J_m/J_c)^{2/3} - 1 of the rescaled problem, if J_m is known."""
        if self.J_m is None:
            return None
        return (self.J_m / self.J_c) ** (2.0 / 3.0) - 1.0


def critical_current() -> float:
    return (2.0 / mu1()) ** 1.5


def gl_stability(J_m: Optional[float]) -> GLStability:
    J_c = critical_current()
    stable = J_m is None or J_m > J_c
    return GLStability(J_c=J_c, stable=stable, J_m=J_m)
