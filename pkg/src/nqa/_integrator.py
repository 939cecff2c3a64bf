"""Compiled Dormand-Prince 5(4) stepper for the two-amplitude mode equations.

Two right-hand sides share one stepper:

* ``KIND_DIABATIC``: amplitudes ``(u, v)`` in the fixed basis,
  ``i u' = J(-x u + sin(phi) v)``, ``i v' = J(sin(phi) u + x v)``, ``x = gt - cos(phi)``.
* ``KIND_ADIABATIC``: amplitudes ``(a, b)`` on the instantaneous eigenvectors,
  ``i a' = -eps a - (i/2) theta' b``, ``i b' = eps b + (i/2) theta' a``.

Non-Hermitian evolution grows or shrinks the joint norm exponentially, so
after each accepted step the state is rescaled by an exact power of two and
the exponent is accumulated separately.  Rescaling by powers of two is
lossless, which keeps results independent of when it happens.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from numba import njit

KIND_DIABATIC = 0
KIND_ADIABATIC = 1

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAX_STEPS = 3

# real parameter slots
R_J, R_TAU, R_COS, R_SIN, R_SC, R_FROZEN = range(6)
# complex parameter slots
C_G, C_EH0, C_A1, C_A2, C_PF, C_EM = range(6)

# Dormand-Prince tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
# continuous extension (Hairer's dense output for DOPRI5)
_D1 = -12715105075 / 11282082432
_D3 = 87487479700 / 32700410799
_D4 = -10690763975 / 1880347072
_D5 = 701980252875 / 199316789632
_D6 = -1453857185 / 822651844
_D7 = 69997945 / 29380423


@njit(cache=True)
def _rhs(kind, t, y0, y1, rp, cp):
    J = rp[R_J]
    tau = rp[R_TAU]
    frozen = rp[R_FROZEN]
    if frozen >= 0.0:
        s = frozen
    else:
        s = t / tau
        if s > 1.0:
            s = 1.0
    G = cp[C_G]
    if kind == KIND_DIABATIC:
        x = G * (1.0 - s) - rp[R_COS]
        sn = rp[R_SIN]
        f0 = -1j * J * (-x * y0 + sn * y1)
        f1 = -1j * J * (sn * y0 + x * y1)
        return f0, f1
    d1 = G * (1.0 - s) - cp[C_EM]
    d2 = G * (rp[R_SC] - s) + cp[C_PF]
    eh = cp[C_EH0] * cmath.sqrt(d1 / cp[C_A1]) * cmath.sqrt(d2 / cp[C_A2])
    eps = J * eh
    if frozen >= 0.0 or t >= tau:
        half_rate = 0.0j
    else:
        half_rate = 0.5 * G * rp[R_SIN] / (tau * d1 * d2)
    # i a' = -eps a - i (th'/2) b ;  i b' = eps b + i (th'/2) a
    f0 = 1j * eps * y0 - half_rate * y1
    f1 = -1j * eps * y1 + half_rate * y0
    return f0, f1


@njit(cache=True)
def _sc(a, b, rtol, atol):
    m = abs(a)
    if abs(b) > m:
        m = abs(b)
    return atol + rtol * m


@njit(cache=True)
def integrate_mode(kind, rp, cp, y0, y1, t_out, rtol, atol, max_steps):
    """Integrate from ``t = 0`` and sample at the increasing times ``t_out``.

    Returns ``(ys, log2scale, status, t_stop, n_steps, n_rejected, max_err)``
    where the true amplitudes are ``ys * 2**log2scale``.
    """
    n_out = t_out.shape[0]
    ys = np.zeros((n_out, 2), dtype=np.complex128)
    lscale = np.zeros(n_out, dtype=np.float64)
    status = STATUS_OK
    n_steps = 0
    n_rej = 0
    max_err = 0.0
    t = 0.0
    log2s = 0.0
    j = 0
    while j < n_out and t_out[j] <= 0.0:
        ys[j, 0] = y0
        ys[j, 1] = y1
        j += 1
    if j == n_out:
        return ys, lscale, status, t, n_steps, n_rej, max_err
    t_end = t_out[n_out - 1]

    J = rp[R_J]
    Gabs = abs(cp[C_G])
    h = 0.01 / (J * (Gabs + 2.0))
    if h > t_end:
        h = t_end
    k1a, k1b = _rhs(kind, t, y0, y1, rp, cp)
    while t < t_end:
        if n_steps + n_rej >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 1e-14 * max(1.0, t):
            status = STATUS_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        a0 = y0 + h * (_A21 * k1a)
        b0 = y1 + h * (_A21 * k1b)
        k2a, k2b = _rhs(kind, t + _C2 * h, a0, b0, rp, cp)
        a0 = y0 + h * (_A31 * k1a + _A32 * k2a)
        b0 = y1 + h * (_A31 * k1b + _A32 * k2b)
        k3a, k3b = _rhs(kind, t + _C3 * h, a0, b0, rp, cp)
        a0 = y0 + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
        b0 = y1 + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
        k4a, k4b = _rhs(kind, t + _C4 * h, a0, b0, rp, cp)
        a0 = y0 + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
        b0 = y1 + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
        k5a, k5b = _rhs(kind, t + _C5 * h, a0, b0, rp, cp)
        a0 = y0 + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a)
        b0 = y1 + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b)
        t_new = t + h
        if last:
            t_new = t_end
        k6a, k6b = _rhs(kind, t_new, a0, b0, rp, cp)
        n0 = y0 + h * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
        n1 = y1 + h * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
        k7a, k7b = _rhs(kind, t_new, n0, n1, rp, cp)
        ea = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
        eb = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
        ra = abs(ea) / _sc(y0, n0, rtol, atol)
        rb = abs(eb) / _sc(y1, n1, rtol, atol)
        err = math.sqrt(0.5 * (ra * ra + rb * rb))
        if not (math.isfinite(err) and math.isfinite(abs(n0)) and math.isfinite(abs(n1))):
            if not (math.isfinite(abs(y0)) and math.isfinite(abs(y1))):
                status = STATUS_NONFINITE
                break
            h *= 0.2
            n_rej += 1
            continue
        if err <= 1.0:
            n_steps += 1
            if err > max_err:
                max_err = err
            # dense output for samples inside (t, t_new]
            if j < n_out and t_out[j] <= t_new:
                r1a = y0
                r1b = y1
                r2a = n0 - y0
                r2b = n1 - y1
                r3a = h * k1a - r2a
                r3b = h * k1b - r2b
                r4a = r2a - h * k7a - r3a
                r4b = r2b - h * k7b - r3b
                r5a = h * (_D1 * k1a + _D3 * k3a + _D4 * k4a + _D5 * k5a + _D6 * k6a + _D7 * k7a)
                r5b = h * (_D1 * k1b + _D3 * k3b + _D4 * k4b + _D5 * k5b + _D6 * k6b + _D7 * k7b)
                while j < n_out and t_out[j] <= t_new:
                    if t_out[j] >= t_new:
                        ys[j, 0] = n0
                        ys[j, 1] = n1
                    else:
                        th = (t_out[j] - t) / h
                        th1 = 1.0 - th
                        ys[j, 0] = r1a + th * (r2a + th1 * (r3a + th * (r4a + th1 * r5a)))
                        ys[j, 1] = r1b + th * (r2b + th1 * (r3b + th * (r4b + th1 * r5b)))
                    lscale[j] = log2s
                    j += 1
            t = t_new
            y0 = n0
            y1 = n1
            k1a = k7a
            k1b = k7b
            nrm2 = (abs(y0) ** 2) + (abs(y1) ** 2)
            if nrm2 > 4.0 or nrm2 < 0.25:
                e = math.floor(0.5 * math.log2(nrm2) + 0.5)
                f = math.ldexp(1.0, -int(e))
                y0 = y0 * f
                y1 = y1 * f
                k1a = k1a * f
                k1b = k1b * f
                log2s += e
            if err == 0.0:
                fac = 10.0
            else:
                fac = 0.9 * err ** (-0.2)
                if fac > 10.0:
                    fac = 10.0
                if fac < 0.2:
                    fac = 0.2
            h = h * fac
        else:
            n_rej += 1
            fac = 0.9 * err ** (-0.2)
            if fac < 0.2:
                fac = 0.2
            h = h * fac
    return ys, lscale, status, t, n_steps, n_rej, max_err
