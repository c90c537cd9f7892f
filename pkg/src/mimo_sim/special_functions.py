"""Scalar special functions for the impedance and error-rate formulas.

Provides the sine integral Si, the cosine integral Ci, the complementary
error function, log-Gamma, and log-normal shadowing draws.  Si and Ci are
evaluated by a Maclaurin series below ``SERIES_CROSSOVER`` and by the
continued-fraction resummation of the large-argument asymptotic expansion
(exponential integral of imaginary argument, modified Lentz) above it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .constants import EULER_GAMMA
from .errors import InvalidArgumentError, NumericFailureError

SERIES_CROSSOVER = 18.0
"""Si/Ci switch from power series to continued fraction at this argument."""

_ERFC_CROSSOVER = 2.5
_MAXIT = 600
_EPS = 1e-17
_TINY = 1e-300


@dataclass(frozen=True)
class FnEvaluation:
    """A function value together with a conservative absolute error bound."""

    argument: float
    value: float
    abs_error_bound: float


def _kahan_sum(terms):
    total = 0.0
    comp = 0.0
    for t in terms:
        y = t - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def _si_ci_series(x):
    """Maclaurin series for (Si, Ci - gamma - ln x), valid for modest x."""
    x2 = x * x
    si_terms = []
    term = x
    k = 0
    while True:
        si_terms.append(term)
        k += 1
        term *= -x2 * (2 * k - 1) / ((2 * k + 1) * (2 * k + 1) * (2 * k))
        if abs(term) < 1e-20 * (1.0 + abs(si_terms[0])):
            break
        if k > 200:
            raise NumericFailureError(f"Si series did not converge at x={x}")
    si = _kahan_sum(si_terms)

    cin_terms = []
    term = -x2 / 4.0
    k = 1
    while True:
        cin_terms.append(term)
        k += 1
        term *= -x2 * (2 * k - 2) / ((2 * k) * (2 * k) * (2 * k - 1))
        if abs(term) < 1e-20:
            break
        if k > 200:
            raise NumericFailureError(f"Ci series did not converge at x={x}")
    cin = _kahan_sum(cin_terms)
    return si, cin


def _e1_imag_cf(x):
    """E1(ix) for x > 0 by the modified Lentz continued fraction."""
    z = complex(1.0, x)
    b = z
    c = complex(1.0 / _TINY, 0.0)
    d = 1.0 / b
    h = d
    for i in range(2, _MAXIT):
        a = -((i - 1) ** 2)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NumericFailureError(f"continued fraction for Si/Ci stalled at x={x}")
    return h * cmath.exp(complex(0.0, -x))


def sine_integral(x: float) -> float:
    """Sine integral Si(x) = integral of sin(t)/t over [0, x].

    Absolute accuracy is 1e-10 or better for 0 <= x <= 1e4.
    """
    if not math.isfinite(x) or x < 0:
        raise InvalidArgumentError(f"sine_integral requires finite x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x <= SERIES_CROSSOVER:
        return _si_ci_series(x)[0]
    e1 = _e1_imag_cf(x)
    return math.pi / 2.0 + e1.imag


def cosine_integral_Ci(x: float) -> float:
    """Cosine integral Ci(x) = gamma + ln x + integral of (cos t - 1)/t over [0, x].

    Absolute accuracy is 1e-10 or better for 0 < x <= 1e4.  The argument must
    be strictly positive (logarithmic singularity at zero).
    """
    if not math.isfinite(x) or x <= 0:
        raise InvalidArgumentError(f"cosine_integral_Ci requires finite x > 0, got {x}")
    if x <= SERIES_CROSSOVER:
        return EULER_GAMMA + math.log(x) + _si_ci_series(x)[1]
    e1 = _e1_imag_cf(x)
    return -e1.real


def _erf_series(x):
    # erf via the non-alternating confluent form: no cancellation.
    x2 = x * x
    total = 0.0
    term = x
    k = 0
    while True:
        total += term
        k += 1
        term *= 2.0 * x2 / (2 * k + 1)
        if term < 1e-20 * total:
            break
        if k > 300:
            raise NumericFailureError(f"erf series did not converge at x={x}")
    return (2.0 / math.sqrt(math.pi)) * math.exp(-x2) * total


def _erfc_cf(x):
    # Laplace continued fraction, modified Lentz; accurate for x >= ~2.
    b = x
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        a = 0.5 * i
        b = x
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NumericFailureError(f"erfc continued fraction stalled at x={x}")
    return math.exp(-x * x) / math.sqrt(math.pi) * h


def erfc(x: float) -> float:
    """Complementary error function, relative accuracy 1e-12 for |x| <= 6."""
    if not math.isfinite(x):
        raise InvalidArgumentError(f"erfc requires finite x, got {x}")
    if x < 0:
        return 2.0 - erfc(-x)
    if x == 0.0:
        return 1.0
    if x < _ERFC_CROSSOVER:
        return 1.0 - _erf_series(x)
    if x > 26.6:
        return 0.0  # below double-precision underflow threshold
    return _erfc_cf(x)


def erf(x: float) -> float:
    """Error function; complement of :func:`erfc`."""
    return 1.0 - erfc(x)


# Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficients).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0, relative accuracy 1e-12."""
    if not (isinstance(x, (int, float)) and math.isfinite(x)) or x <= 0:
        raise InvalidArgumentError(f"ln_gamma requires finite x > 0, got {x}")
    if x < 0.5:
        # recurrence keeps the Lanczos kernel in its accurate range
        return ln_gamma(x + 1.0) - math.log(x)
    acc = _LANCZOS_C[0]
    for k in range(1, 15):
        acc += _LANCZOS_C[k] / (x - 1.0 + k)
    t = x + _LANCZOS_G - 0.5
    return 0.5 * math.log(2.0 * math.pi) + (x - 0.5) * math.log(t) - t + math.log(acc)


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0."""
    return math.exp(ln_gamma(x))


def sample_lognormal_shadowing(sigma_dB: float, seed, size=None):
    """Linear-scale log-normal shadowing factor(s) 10**(X/10), X ~ N(0, sigma_dB^2).

    ``seed`` may be an integer seed or a ``numpy.random.Generator``.  With
    ``size=None`` a single float is returned, otherwise an ndarray.
    """
    if sigma_dB < 0:
        raise InvalidArgumentError(f"sigma_dB must be >= 0, got {sigma_dB}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x_db = rng.normal(0.0, sigma_dB, size=size)
    return 10.0 ** (x_db / 10.0)


_ERROR_BOUNDS = {
    "sine_integral": lambda x, v: 1e-10,
    "cosine_integral_Ci": lambda x, v: 1e-10,
    "erfc": lambda x, v: abs(v) * 1e-12 + 5e-324,
    "ln_gamma": lambda x, v: abs(v) * 1e-12 + 1e-15,
}


def evaluate(name: str, x: float) -> FnEvaluation:
    """Evaluate a named special function and attach its absolute error bound."""
    fns = {
        "sine_integral": sine_integral,
        "cosine_integral_Ci": cosine_integral_Ci,
        "erfc": erfc,
        "ln_gamma": ln_gamma,
    }
    if name not in fns:
        raise InvalidArgumentError(f"unknown function {name!r}")
    value = fns[name](x)
    return FnEvaluation(argument=x, value=value, abs_error_bound=_ERROR_BOUNDS[name](x, value))
