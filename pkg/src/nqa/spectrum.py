"""Instantaneous eigenstructure of the per-mode 2x2 non-Hermitian Hamiltonian.

The mode Hamiltonian is

    H_k(t) = -eps0_k(t) * 1 + J [[gt - cos phi, sin phi], [sin phi, -(gt - cos phi)]]

with ``gt = (g + i delta)(1 - t/tau)`` and ``eps0_k = J cos phi + i J delta (1 - t/tau)``.
Its eigenvalues are ``-eps0 -/+ J * epshat`` where

    epshat**2 = (gt - exp(-i phi)) * (gt - exp(+i phi)).

Branch handling
---------------
The square root is fixed by the principal value at ``t = 0`` and continued
along the ramp in closed form::

    epshat(t) = epshat(0) * sqrt(w1(t)) * sqrt(w2(t)),   w_j = (gt - p_j) / (g + i delta - p_j)

Each ``w_j`` runs along a straight segment starting at 1, so it can only meet
the negative real axis by passing through zero, i.e. by hitting the
exceptional point.  Principal roots of ``w_j`` are therefore continuous in
``t`` and no per-trajectory tracking state is needed.  The complex mixing
angle is continued the same way, ``theta = theta0 + (Log w1 - Log w2) / 2i``.

"Continuous" labels (``e_plus``/``e_minus``) follow this continuation from
``t = 0`` where ``Re e_plus > Re e_minus``.  For modes with ``phi < alpha`` the
path passes the exceptional point on the other side and the continued labels
end up swapped at ``t = tau``; ``ModeSpectrum.swapped`` flags instants where
the continued ``e_minus`` is not the lower-real-energy level.

The factor ``gt - exp(i phi)`` vanishes at the exceptional point.  It is
evaluated as ``G (s_c - s) + (exp(i alpha) - exp(i phi))`` with
``s_c = 1 - 1/|G|`` so that the gap closes to exact zero at ``(phi_c, t_c)``
instead of to rounding noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChainParams, ParameterError, mode_angle

EP_GAP_THRESHOLD = 1e-10
"""|eps_k| below ``EP_GAP_THRESHOLD * J`` is reported as exceptional-point degenerate."""


class NoExceptionalPoint(ValueError):
    """The ramp never reaches an exceptional point during the quench."""


def _phi_of(params: ChainParams, k, phi):
    if phi is not None:
        if k is not None:
            raise ParameterError("pass either k or phi, not both")
        return phi
    if k is None:
        raise ParameterError("a mode index k or a continuous angle phi is required")
    if np.ndim(k) == 0:
        return mode_angle(params.N, int(k)).phi
    k = np.asarray(k)
    if np.any((k < 1) | (k > params.n_modes)):
        raise ParameterError(f"mode index outside 1..{params.n_modes}")
    return np.pi * (2 * k - 1) / params.N


def _s_of(params: ChainParams, t, s):
    if s is not None:
        if t is not None:
            raise ParameterError("pass either t or s, not both")
        s = np.asarray(s, dtype=float)
    else:
        s = np.asarray(0.0 if t is None else t, dtype=float) / params.tau
    if np.any(s < 0):
        raise ParameterError("time must be non-negative")
    return np.minimum(s, 1.0)


def branch_data(params: ChainParams, phi, s):
    """Vectorised continued square root and mixing angle.

    ``phi`` and ``s`` broadcast against each other; ``s`` is clipped to
    ``[0, 1]`` (the field is frozen at zero after the quench).  Returns a
    dict with ``gt``, ``eps_hat``, ``eps_hat_sq``, ``theta``, ``eps0``.
    """
    phi = np.asarray(phi, dtype=float)
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    G = params.G
    absG = abs(G)
    alpha = params.alpha
    s_c = 1.0 - 1.0 / absG
    p1 = np.exp(-1j * phi)

    def near_ep_factor(sv):
        # G (1 - s) - exp(i phi), written relative to the exceptional point
        return G * (s_c - sv) + 2j * np.sin(0.5 * (alpha - phi)) * np.exp(0.5j * (alpha + phi))

    gt = G * (1.0 - s)
    d1 = gt - p1
    d2 = near_ep_factor(s)
    a1 = G - p1
    a2 = near_ep_factor(0.0)
    w1 = d1 / a1
    w2 = d2 / a2
    eps_hat0 = np.sqrt(a1 * a2)
    eps_hat = eps_hat0 * np.sqrt(w1) * np.sqrt(w2)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta0 = -1j * np.log(a1 / eps_hat0)
        theta = theta0 + (np.log(w1) - np.log(w2)) / 2j
    # Hermitian instants: remove rounding residue so that widths vanish exactly
    herm = (params.delta == 0.0) | (s >= 1.0)
    if np.any(herm):
        eps_hat = np.where(herm, eps_hat.real + 0j, eps_hat)
        theta = np.where(herm, theta.real + 0j, theta)
    eps0 =params.J * np.cos(phi) + 1j * params.J * params.delta * (1.0 - s)
    return {
        "gt": gt,
        "eps_hat": eps_hat,
        "eps_hat_sq": d1 * d2,
        "theta": theta,
        "eps0": eps0,
        "phi": phi,
        "s": s,
    }


@dataclass(frozen=True)
class ModeHamiltonian:
    h11: complex
    h12: complex
    h21: complex
    h22: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h21, self.h22]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.h11 + self.h22


def hamiltonian(params: ChainParams, k=None, t=None, *, phi=None, s=None) -> ModeHamiltonian:
    phi = float(_phi_of(params, k, phi))
    s = float(_s_of(params, t, s))
    c, sn = math.cos(phi), math.sin(phi)
    gt = params.G * (1.0 - s)
    eps0 = params.J * c + 1j * params.J * params.delta * (1.0 - s)
    x = params.J * (gt - c)
    off = complex(params.J * sn, 0.0)
    return ModeHamiltonian(-eps0 + x, off, off, -eps0 - x)


@dataclass(frozen=True)
class ModeSpectrum:
    eps0: complex
    eps: complex
    e_plus: complex
    e_minus: complex
    theta: complex
    u_plus: np.ndarray
    u_minus: np.ndarray
    ut_plus: np.ndarray
    ut_minus: np.ndarray
    degenerate: bool
    swapped: bool

    @property
    def ground_energy(self) -> complex:
        """Eigenvalue with the lower real part."""
        return self.e_plus if self.swapped else self.e_minus


def eigensystem(params: ChainParams, k=None, t=None, *, phi=None, s=None) -> ModeSpectrum:
    """Eigenvalues and biorthonormal eigenvectors of one mode at one time.

    Vectors are in the basis of :func:`hamiltonian`.  Because the matrix is
    complex symmetric the left eigenvectors are the transposes of the right
    ones, and ``ut_a @ u_b = delta_ab`` holds without conjugation.
    """
    phi = float(_phi_of(params, k, phi))
    s = float(_s_of(params, t, s))
    b = branch_data(params, phi, s)
    eps = complex(params.J * b["eps_hat"])
    eps0 = complex(b["eps0"])
    theta = complex(b["theta"])
    degenerate = abs(eps) < EP_GAP_THRESHOLD * params.J
    if degenerate:
        nan2 = np.full(2, np.nan + 0j)
        u_p = u_m = nan2
    else:
        ch, sh = np.cos(theta / 2), np.sin(theta / 2)
        u_p = np.array([ch, sh])
        u_m = np.array([-sh, ch])
    return ModeSpectrum(
        eps0=eps0,
        eps=eps,
        e_plus=-eps0 + eps,
        e_minus=-eps0 - eps,
        theta=theta,
        u_plus=u_p,
        u_minus=u_m,
        ut_plus=u_p.copy(),
        ut_minus=u_m.copy(),
        degenerate=bool(degenerate),
        swapped=bool(eps.real < 0),
    )


@dataclass(frozen=True)
class ExceptionalPoint:
    phi_c: float
    t_c_over_tau: float
    k_nearest: int


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def exceptional_point(params: ChainParams) -> ExceptionalPoint:
    r2 = params.g**2 + params.delta**2
    if r2 <= 1.0:
        raise NoExceptionalPoint(
            f"no EP within quench: g^2 + delta^2 = {r2} <= 1 puts the crossing before t=0"
        )
    phi_c = math.atan(params.delta / params.g)
    k = _round_half_away(params.N * phi_c / (2 * math.pi) + 0.5)
    k = min(max(k, 1), params.n_modes)
    return ExceptionalPoint(phi_c=phi_c, t_c_over_tau=1.0 - 1.0 / math.sqrt(r2), k_nearest=k)


@dataclass(frozen=True)
class AdiabaticityReport:
    eta: float
    max_theta_rate: float
    min_gap: float
    at_ep: bool


def adiabaticity(params: ChainParams, k=None, *, phi=None) -> AdiabaticityReport:
    """Adiabaticity parameter ``eta = max|dtheta/dt| / (2 min|eps_k|)``.

    Closed-form extrema over the linear ramp; ``eta`` diverges when the mode
    sits on the exceptional point (``phi == alpha``).
    """
    phi = float(_phi_of(params, k, phi))
    a = params.alpha
    prod = abs(math.sin(a - phi) * math.sin(a + phi))
    ca = math.cos(a)
    min_gap = params.J / ca * math.sqrt(prod)
    if prod == 0.0:
        return AdiabaticityReport(math.inf, math.inf, 0.0, True)
    rate = params.g * ca * abs(math.sin(phi)) / (params.tau * prod)
    eta = params.g * ca**2 * abs(math.sin(phi)) / (2 * params.J * params.tau * prod**1.5)
    return AdiabaticityReport(eta, rate, min_gap, False)


def adiabaticity_map(params: ChainParams, phi) -> np.ndarray:
    """``eta`` on an array of continuous angles (inf on the exceptional point)."""
    phi = np.asarray(phi, dtype=float)
    a = params.alpha
    prod = np.abs(np.sin(a - phi) * np.sin(a + phi))
    with np.errstate(divide="ignore"):
        return params.g * math.cos(a) ** 2 * np.abs(np.sin(phi)) / (
            2 * params.J * params.tau * prod**1.5
        )


def hermitian_time_bound(params: ChainParams) -> float:
    """Annealing time ``g N^2 / (2 J pi^2)`` needed for adiabatic Hermitian QA."""
    return params.g * params.N**2 / (2 * params.J * math.pi**2)


@dataclass(frozen=True)
class TimeEstimate:
    tau_est: float
    delta_opt: float
    tau_at_opt: float


def nqa_time_estimate(params: ChainParams) -> TimeEstimate:
    if params.delta <= 0:
        raise ParameterError("estimate undefined for delta = 0; use hermitian_time_bound")
    L = math.log(params.N / math.pi)
    tau_est = (params.g**2 + params.delta**2) * L / (params.delta * params.J)
    # (g^2 + d^2)/d is minimised at d = g
    return TimeEstimate(tau_est, params.g, 2 * params.g * L / params.J)


@dataclass(frozen=True)
class Resonance:
    E: float
    width: float


def resonance_widths(params: ChainParams, k=None, t=None, *, phi=None, s=None):
    """Both resonances of one mode, superradiant (wider) first."""
    sp = eigensystem(params, k, t, phi=phi, s=s)
    r = [Resonance(e.real, -e.imag) for e in (sp.e_plus, sp.e_minus)]
    r.sort(key=lambda x: -x.width)
    return r[0], r[1]


def resonance_arrays(params: ChainParams, phi, s):
    """Vectorised energies/widths: ``(E_sup, W_sup, E_sub, W_sub)``."""
    b = branch_data(params, phi, s)
    e_p = -b["eps0"] + params.J * b["eps_hat"]
    e_m = -b["eps0"] - params.J * b["eps_hat"]
    w_p, w_m = -e_p.imag, -e_m.imag
    sup_is_p = w_p >= w_m
    e_sup = np.where(sup_is_p, e_p, e_m)
    e_sub = np.where(sup_is_p, e_m, e_p)
    return e_sup.real, -e_sup.imag, e_sub.real, -e_sub.imag


def overlap_diagnostic(params: ChainParams, t=None, *, s=None) -> np.ndarray:
    """Resonance-overlap ratio for every adjacent pair of modes.

    ``r = (W(k) + W(k+1)) / (2 |E(k) - E(k+1)|)`` with ``W`` the superradiant
    half-widths and ``E`` the subradiant energies.  ``r >= 1`` marks the
    overlapping (superradiant) regime.
    """
    s = float(_s_of(params, t, s))
    phi = np.pi * (2 * np.arange(1, params.n_modes + 1) - 1) / params.N
    _, w_sup, e_sub, _ = resonance_arrays(params, phi, s)
    num = w_sup[:-1] + w_sup[1:]
    gap = np.abs(np.diff(e_sub))
    out = np.zeros_like(num)
    tiny = gap < 1e-14
    out[~tiny] = num[~tiny] / (2 * gap[~tiny])
    out[tiny & (num > 0)] = np.inf
    return out
