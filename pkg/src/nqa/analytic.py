"""Special functions and closed-form predictions for the linear complex ramp.

Special functions
    ``complex_gamma`` / ``loggamma`` / ``rgamma`` (Lanczos, g = 7, nine terms),
    ``lerch_phi`` (direct series, or Euler-Maclaurin close to ``x = 1``) and
    ``parabolic_cylinder_D`` (two Kummer series).  Each can return an error
    estimate alongside the value.

Closed forms
    the exact parabolic-cylinder (Weber) solution of a single mode,
    its long-wavelength asymptotics, first-mode estimates of the
    ground-state probability and the Gaussian-approximation kink density.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc
from scipy.integrate import quad

from .core import ChainParams, ParameterError, mode_angle

EPS = np.finfo(float).eps


class SpecialFunctionError(ArithmeticError):
    """Evaluation outside the supported domain or without convergence."""


# ---------------------------------------------------------------- Gamma

_LANCZOS_G = 7.0
_LANCZOS = (
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
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _is_pole(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def _loggamma_right(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1
    x = _LANCZOS[0]
    for i in range(1, 9):
        x += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def loggamma(z) -> complex:
    """``log Gamma(z)`` (some branch: the imaginary part is only defined mod 2 pi)."""
    z = complex(z)
    if _is_pole(z):
        raise SpecialFunctionError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        # reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return math.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - _loggamma_right(1 - z)
    return _loggamma_right(z)


def complex_gamma(z) -> complex:
    """Gamma function of a complex argument."""
    z = complex(z)
    if _is_pole(z):
        raise SpecialFunctionError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * cmath.exp(_loggamma_right(1 - z)))
    return cmath.exp(_loggamma_right(z))


def rgamma(z) -> complex:
    """``1/Gamma(z)``, entire; exactly zero at the poles of Gamma."""
    z = complex(z)
    if _is_pole(z):
        return 0j
    if z.real < 0.5:
        return cmath.sin(math.pi * z) * cmath.exp(_loggamma_right(1 - z)) / math.pi
    return cmath.exp(-_loggamma_right(z))


def abs_gamma_sq(z) -> float:
    """``|Gamma(z)|**2`` through the log to avoid intermediate overflow."""
    return math.exp(2 * loggamma(z).real)


# ---------------------------------------------------------------- Lerch


def _lerch_series(x, s, a, max_terms):
    total = 0.0
    comp = 0.0
    xn = 1.0
    n = 0
    tail = math.inf
    while n < max_terms:
        term = xn / (n + a) ** s
        # Kahan summation keeps the sum reproducible at the last bit
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        xn *= x
        tail = xn / ((n + 1 + a) ** s * (1 - x)) if x > 0 else 0.0
        n += 1
        if tail < 1e-14 * total:
            return total, tail, True
    return total, tail, False


_BERN = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66)


def _lerch_euler_maclaurin(mu, s, a, M=200):
    """``Phi(exp(-mu), s, a)`` for small ``mu`` and ``s > 0``."""
    head = 0.0
    for n in range(M):
        head += math.exp(-mu * n) / (n + a) ** s
    y = mu * (M + a)
    if s < 1.0:
        tail_int = math.exp(mu * a) * mu ** (s - 1) * math.gamma(1 - s) * gammaincc(1 - s, y)
    else:
        # Gamma(1 - s, y) has no scipy form for s >= 1; integrate directly
        tail_int = quad(lambda u: math.exp(-mu * (M + u)) * (M + u + a) ** (-s),
                        0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)[0]

    def deriv(m, t):
        # m-th derivative of exp(-mu t) (t+a)^(-s), by Leibniz
        acc = 0.0
        for j in range(m + 1):
            poch = 1.0
            for i in range(j):
                poch *= -s - i
            acc += math.comb(m, j) * (-mu) ** (m - j) * poch * (M + a) ** (-s - j)
        return acc * math.exp(-mu * t)

    corr = 0.5 * math.exp(-mu * M) / (M + a) ** s
    for j, b in enumerate(_BERN, start=1):
        corr -= b / math.factorial(2 * j) * deriv(2 * j - 1, M)
    err = abs(_BERN[-1] / math.factorial(2 * len(_BERN)) * deriv(2 * len(_BERN) - 1, M))
    return float(head + tail_int + corr), float(err + 1e-15 * (head + tail_int))


def lerch_phi(x, s, a, *, max_terms: int = 1_000_000, with_error: bool = False):
    """Lerch transcendent ``Phi(x, s, a) = sum_n x**n / (n + a)**s`` for ``0 <= x < 1``.

    With ``with_error`` a ``(value, bound)`` pair is returned; on the
    series path the bound is the geometric tail bound
    ``x**(n+1) / ((n+1+a)**s (1-x))``.
    """
    x, s, a = float(x), float(s), float(a)
    if not (0.0 <= x < 1.0):
        raise SpecialFunctionError("Lerch series requires 0 <= x < 1")
    if s <= 0 or a <= 0:
        raise SpecialFunctionError("Lerch series requires s > 0 and a > 0")
    if x > 0.99:
        val, err = _lerch_euler_maclaurin(-math.log(x), s, a)
    else:
        val, err, ok = _lerch_series(x, s, a, max_terms)
        if not ok and not with_error:
            raise SpecialFunctionError(f"Lerch series not converged after {max_terms} terms")
    return (val, err) if with_error else val


def lerch_phi_exp(mu, s, a, *, with_error: bool = False):
    """``Phi(exp(-mu), s, a)``: usable when ``1 - x`` is below double resolution."""
    mu = float(mu)
    if mu <= 0:
        raise SpecialFunctionError("mu must be positive")
    if mu < 0.01 and 0 < s < 1:
        val, err = _lerch_euler_maclaurin(mu, float(s), float(a))
        return (val, err) if with_error else val
    return lerch_phi(math.exp(-mu), s, a, with_error=with_error)


# ---------------------------------------------------------------- parabolic cylinder

PCF_MAX_ABS_Z = 12.0
PCF_MAX_TERMS = 1000


def _kummer(a: complex, b: complex, x: complex):
    """Series for ``M(a, b, x)`` with ``Re x >= 0``; returns (value, sum of |terms|)."""
    term = 1.0 + 0j
    total = term
    absum = 1.0
    for n in range(PCF_MAX_TERMS):
        term *= (a + n) / (b + n) * x / (n + 1)
        total += term
        absum += abs(term)
        if abs(term) < 1e-16 * abs(total) and abs(term) < 1e-16 * absum:
            return total, absum
        if term == 0:
            return total, absum
    raise SpecialFunctionError(f"Kummer series not converged in {PCF_MAX_TERMS} terms")


def _kummer_rhp(a: complex, b: complex, x: complex):
    """``M(a, b, x)`` with Kummer's transformation used for ``Re x < 0``."""
    if x.real >= 0:
        return _kummer(a, b, x)
    m, absum = _kummer(b - a, b, -x)
    e = cmath.exp(x)
    return e * m, abs(e) * absum


def parabolic_cylinder_D(p, z, *, with_error: bool = False):
    """Whittaker's parabolic cylinder function ``D_p(z)`` for ``|z| <= 12``.

    ``D_p(z) = 2**(p/2) sqrt(pi) exp(-z**2/4) [ M(-p/2, 1/2, z**2/2) / Gamma((1-p)/2)
    - sqrt(2) z M((1-p)/2, 3/2, z**2/2) / Gamma(-p/2) ]``.

    The error estimate is the rounding budget of the two series (sum of
    absolute terms times a few ulps) plus the Lanczos relative accuracy.
    """
    p = complex(p)
    z = complex(z)
    if abs(z) > PCF_MAX_ABS_Z:
        raise SpecialFunctionError(f"|z| = {abs(z):.3g} outside the series domain |z| <= {PCF_MAX_ABS_Z}")
    x = z * z / 2
    m1, s1 = _kummer_rhp(-p / 2, 0.5 + 0j, x)
    m2, s2 = _kummer_rhp((1 - p) / 2, 1.5 + 0j, x)
    r1 = rgamma((1 - p) / 2)
    r2 = rgamma(-p / 2)
    pref = cmath.exp(p / 2 * math.log(2) - z * z / 4) * math.sqrt(math.pi)
    t1 = m1 * r1
    t2 = math.sqrt(2) * z * m2 * r2
    val = pref * (t1 - t2)
    if not with_error:
        return val
    err = abs(pref) * (
        4 * EPS * (s1 * abs(r1) + math.sqrt(2) * abs(z) * s2 * abs(r2))
        + 1e-13 * (abs(t1) + abs(t2))
    )
    return val, err


# ---------------------------------------------------------------- Weber solution


@dataclass(frozen=True)
class WeberParams:
    nu: complex
    z: complex


def weber_params(params: ChainParams, k: int, t: float | None = None) -> WeberParams:
    """Order ``nu_k`` and argument ``z_k(t)`` (default ``t = tau``)."""
    phi = mode_angle(params.N, k).phi
    t = params.tau if t is None else float(t)
    G = params.G
    s = min(t / params.tau, 1.0)
    nu = params.tau * params.J * math.sin(phi) ** 2 / (2 * G)
    z = cmath.exp(0.25j * math.pi) * cmath.sqrt(2 * params.tau * params.J / G) * (G * (1 - s) - math.cos(phi))
    return WeberParams(nu, z)


@dataclass(frozen=True)
class WeberResult:
    survival: float
    excitation: float
    uncertainty: float


def weber_survival(params: ChainParams, k: int, *, detailed: bool = False):
    """Final survival probability of mode ``k`` from the parabolic-cylinder solution.

    The normalisation constant of the solution cancels in the ratio and is
    never computed.  ``detailed`` returns a :class:`WeberResult` carrying
    ``1 - P`` at full precision and a propagated uncertainty.
    """
    wp = weber_params(params, k)
    phi = mode_angle(params.N, k).phi
    d0, e0 = parabolic_cylinder_D(-1j * wp.nu, wp.z, with_error=True)
    d1, e1 = parabolic_cylinder_D(-1j * wp.nu - 1, wp.z, with_error=True)
    r = cmath.sqrt(1j * wp.nu)
    sh, ch = math.sin(phi / 2), math.cos(phi / 2)
    a = d0 * sh + r * d1 * ch
    b = d0 * ch - r * d1 * sh
    aa, bb = abs(a) ** 2, abs(b) ** 2
    P, X = aa / (aa + bb), bb / (aa + bb)
    amp_err = e0 + abs(r) * e1
    n = math.sqrt(aa + bb)
    unc = min(1.0, 2 * amp_err / n * (math.sqrt(P * X) + amp_err / n))
    if detailed:
        return WeberResult(P, X, unc)
    return P


def pk_asymptotic(params: ChainParams, k: int) -> float:
    """Long-wavelength asymptotic survival probability of mode ``k``.

    Restricted to ``phi_k < pi/8``; a warning is issued above ``pi/16``.
    """
    phi = mode_angle(params.N, k).phi
    if phi >= math.pi / 8:
        raise ParameterError(f"phi_k = {phi:.4g} outside the long-wavelength range phi < pi/8")
    if phi > math.pi / 16:
        warnings.warn("pk_asymptotic used near the edge of its long-wavelength range", stacklevel=2)
    wp = weber_params(params, k)
    nu = wp.nu
    re_z2 = 2 * params.tau * params.J * math.cos(phi) ** 2 * params.delta / abs(params.G) ** 2
    log_x = 2 * loggamma(1 + 1j * nu).real - math.log(2 * math.pi * abs(nu)) - math.pi * nu.real - re_z2
    return 1.0 / (1.0 + math.exp(log_x))


# ---------------------------------------------------------------- ground-state estimates


@dataclass(frozen=True)
class ClosedFormInputs:
    tau0: float
    nu_first: complex
    kappa: float
    kappa0: float


def closed_form_inputs(params: ChainParams) -> ClosedFormInputs:
    a = params.alpha
    tau0 = 2 * params.g * params.N**2 / (math.pi**2 * params.J)
    r = params.tau / tau0
    nu = math.cos(a) * cmath.exp(-1j * a) * r
    kappa0 = params.tau * params.J / (math.pi * params.g) * math.sin(2 * a)
    return ClosedFormInputs(tau0, nu, r * math.cos(a) ** 2 + kappa0, kappa0)


def pgs_landau_zener(params: ChainParams) -> float:
    """Hermitian first-mode estimate ``1 - exp(-2 pi tau/tau0)``."""
    tau0 = closed_form_inputs(params).tau0
    return -math.expm1(-2 * math.pi * params.tau / tau0)


def pgs_first_mode(params: ChainParams) -> float:
    ci = closed_form_inputs(params)
    log_x = (
        math.log(params.tau / (2 * math.pi * ci.tau0))
        + 2 * loggamma(1j * ci.nu_first).real
        - math.pi * ci.kappa
    )
    return 1.0 / (1.0 + math.exp(log_x))


@dataclass(frozen=True)
class FastQuenchEstimate:
    p_gs: float
    p_gs_kappa0: float
    at1_value: float
    at1_satisfied: bool
    in_fast_regime: bool
    approximation_valid: bool


def pgs_fast_quench(params: ChainParams) -> FastQuenchEstimate:
    """Fast-quench (``tau << tau0``) ground-state estimate.

    ``p_gs`` is ``1 - (tau0 / 2 pi tau) exp(-pi kappa)``; ``p_gs_kappa0`` is
    the un-expanded ``1 / (1 + (tau0 / 2 pi tau) exp(-pi kappa0))`` form.
    ``approximation_valid`` is false when the linearised form leaves [0, 1].
    """
    ci = closed_form_inputs(params)
    ratio = ci.tau0 / (2 * math.pi * params.tau)
    fast = params.tau < ci.tau0 / 10
    if not fast:
        warnings.warn("fast-quench estimate used outside tau < tau0/10", stacklevel=2)
    p = 1.0 - ratio * math.exp(-math.pi * ci.kappa)
    p0 = 1.0 / (1.0 + ratio * math.exp(-math.pi * ci.kappa0))
    at1 = params.tau * params.J / params.g * math.sin(2 * params.alpha) - math.log(ratio)
    return FastQuenchEstimate(p, p0, at1, at1 > 3.0, fast, 0.0 <= p <= 1.0)


# ---------------------------------------------------------------- kink density


@dataclass(frozen=True)
class ClosedDensity:
    density: float
    n0: float
    within_validity: bool


def kink_density_closed(params: ChainParams) -> ClosedDensity:
    """Gaussian-approximation kink density; ``within_validity`` is false for ``delta > g``."""
    n0 = math.sqrt(params.g / (params.J * params.tau)) / (2 * math.pi)
    X = 2 * params.delta * params.tau * params.J / params.g**2
    if X == 0:
        return ClosedDensity(n0, n0, True)
    # argument 1 - exp(-X) written as exp(-mu) so it survives X >> 1
    mu = -math.log1p(-math.exp(-X))
    phi_val = lerch_phi_exp(mu, 0.5, 1.0)
    return ClosedDensity(float(n0 * math.exp(-X) * phi_val), n0, params.delta <= params.g)


def pgs_weber(params: ChainParams, ks=None) -> tuple[float, np.ndarray]:
    """Product of :func:`weber_survival` over modes (all by default), in ascending k."""
    ks = range(1, params.n_modes + 1) if ks is None else ks
    X = np.array([weber_survival(params, int(k), detailed=True).excitation for k in ks])
    total = 0.0
    for x in X:
        total += math.log1p(-x) if x < 1 else -math.inf
    return math.exp(total), 1.0 - X
