"""Mode-by-mode time evolution through the quench and the derived observables.

Two independent engines integrate the same physics:

``integrate_diabatic``
    amplitudes ``(u, v)`` on the fixed basis; coefficients stay bounded at
    the exceptional point, so every mode can be integrated.
``integrate_adiabatic``
    amplitudes ``(alpha, beta)`` on the instantaneous eigenvectors; the
    coupling ``theta'`` diverges at the exceptional point so modes too close
    to ``phi = alpha`` are refused.

Both start in the instantaneous ground state at ``t = 0``.  The common phase
``exp(i * integral eps0 dt)`` is never formed; it cancels in every
observable, which are all ratios of amplitudes.  Survival probabilities use
real-part ordering of the two levels: the "ground" level is the one whose
eigenvalue has the lower real part at the sampled instant.

Per-mode work is independent.  Batches can be fanned out over worker
processes; every reduction happens afterwards in ascending mode order so
results do not depend on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _integrator as _ig
from .core import ChainParams, ParameterError, mode_angles
from .spectrum import ModeSpectrum, _phi_of, branch_data

RTOL = 1e-12
ATOL = 1e-14
MAX_STEPS = 50_000_000
EP_EXCLUSION = 1e3 * np.finfo(float).eps ** (1.0 / 3.0)
DEFAULT_SAMPLES = 1001
CHUNK = 16


class IntegrationError(RuntimeError):
    """A mode integration did not reach the end of the sample grid."""

    def __init__(self, message: str, s_fail: float = math.nan, k=None):
        super().__init__(message)
        self.s_fail = s_fail
        self.k = k


class EPExclusionError(ParameterError):
    """Mode lies too close to the exceptional-point angle for the adiabatic frame."""


@dataclass(frozen=True)
class ModeState:
    u: complex
    v: complex


@dataclass(frozen=True)
class AdiabaticState:
    alpha_amp: complex
    beta_amp: complex


@dataclass(frozen=True)
class IntegratorStats:
    steps: int
    rejected: int
    max_error: float
    status: int = 0


@dataclass
class Trajectory:
    """Sampled evolution of one mode.

    ``amplitudes[i] * 2**log2scale[i]`` are the physical amplitudes at
    ``s[i]`` in the frame named by ``frame``.  ``survival`` and
    ``excitation`` are computed separately so that ``1 - P`` keeps full
    relative precision when ``P`` is close to one.
    """

    k: int | None
    phi: float
    frame: str
    s: np.ndarray
    amplitudes: np.ndarray
    log2scale: np.ndarray
    survival: np.ndarray
    excitation: np.ndarray
    stats: IntegratorStats

    def state(self, i: int):
        a, b = self.amplitudes[i]
        if self.frame == "diabatic":
            return ModeState(complex(a), complex(b))
        return AdiabaticState(complex(a), complex(b))

    @property
    def final_survival(self) -> float:
        return float(self.survival[-1])

    @property
    def final_excitation(self) -> float:
        return float(self.excitation[-1])


def frame_transform(state: ModeState, spectrum: ModeSpectrum) -> AdiabaticState:
    """Diabatic ``(u, v)`` to adiabatic ``(alpha, beta)`` at the instant of ``spectrum``."""
    if spectrum.degenerate:
        raise ParameterError("eigenbasis is defective at the exceptional point")
    c, s = np.cos(spectrum.theta / 2), np.sin(spectrum.theta / 2)
    return AdiabaticState(
        complex(state.u * c - state.v * s), complex(state.v * c + state.u * s)
    )


def inverse_frame_transform(state: AdiabaticState, spectrum: ModeSpectrum) -> ModeState:
    if spectrum.degenerate:
        raise ParameterError("eigenbasis is defective at the exceptional point")
    c, s = np.cos(spectrum.theta / 2), np.sin(spectrum.theta / 2)
    a, b = state.alpha_amp, state.beta_amp
    return ModeState(complex(a * c + b * s), complex(-a * s + b * c))


def survival_probability(state: AdiabaticState) -> float:
    n = abs(state.alpha_amp) ** 2 + abs(state.beta_amp) ** 2
    if n == 0:
        raise ParameterError("zero-norm state has no survival probability")
    return abs(state.alpha_amp) ** 2 / n


def _labelled_probabilities(a, b, eps_hat):
    """(P, 1-P) with the ground level chosen by real part of the eigenvalue."""
    swapped = eps_hat.real < 0
    g = np.where(swapped, b, a)
    e = np.where(swapped, a, b)
    ag, ae = np.abs(g) ** 2, np.abs(e) ** 2
    tot = ag + ae
    return ag / tot, ae / tot


def _sample_grid(sample_grid) -> np.ndarray:
    if sample_grid is None:
        return np.linspace(0.0, 1.0, DEFAULT_SAMPLES)
    s = np.asarray(sample_grid, dtype=float).ravel()
    if s.size < 1 or np.any(np.diff(s) <= 0) or s[0] < 0 or s[-1] > 1:
        raise ParameterError("sample grid must be strictly increasing inside [0, 1]")
    return s


def _mode_constants(params: ChainParams, phi: float, frozen_s: float | None = None):
    G = params.G
    alpha = params.alpha
    pf = 2j * math.sin(0.5 * (alpha - phi)) * complex(
        math.cos(0.5 * (alpha + phi)), math.sin(0.5 * (alpha + phi))
    )
    em = complex(math.cos(phi), -math.sin(phi))
    a1 = G - em
    s_c = 1.0 - 1.0 / abs(G)
    a2 = G * s_c + pf
    eh0 = np.sqrt(a1 * a2)
    rp = np.array(
        [params.J, params.tau, math.cos(phi), math.sin(phi), s_c,
         -1.0 if frozen_s is None else float(frozen_s)]
    )
    cp = np.array([G, eh0, a1, a2, pf, em], dtype=np.complex128)
    return rp, cp


def _initial_diabatic(params: ChainParams, phi: float):
    th0 = complex(branch_data(params, phi, 0.0)["theta"])
    return complex(np.cos(th0 / 2)), complex(-np.sin(th0 / 2))


def _run_chunk(kind, rps, cps, y0s, t_out, rtol, atol, max_steps):
    out = []
    for rp, cp, (a, b) in zip(rps, cps, y0s):
        ys, ls, status, t_stop, ns, nr, me = _ig.integrate_mode(
            kind, rp, cp, a, b, t_out, rtol, atol, max_steps
        )
        out.append((ys, ls, int(status), float(t_stop), int(ns), int(nr), float(me)))
    return out


def _dispatch(kind, rps, cps, y0s, t_out, rtol, atol, max_steps, workers):
    n = len(rps)
    chunks = [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(chunks) <= 1:
        res = [_run_chunk(kind, rps[c], cps[c], y0s[c], t_out, rtol, atol, max_steps) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [
                ex.submit(_run_chunk, kind, rps[c], cps[c], y0s[c], t_out, rtol, atol, max_steps)
                for c in chunks
            ]
            res = [f.result() for f in futs]
    return [r for chunk in res for r in chunk]


def _check_status(raw, tau, k, phi):
    _, _, status, t_stop, _, _, _ = raw
    where = f"k={k}" if k is not None else f"phi={phi!r}"
    if status == _ig.STATUS_UNDERFLOW:
        raise IntegrationError(f"step size underflow at s={t_stop / tau:.6g} ({where})", t_stop / tau, k)
    if status == _ig.STATUS_NONFINITE:
        raise IntegrationError(f"non-finite amplitudes at s={t_stop / tau:.6g} ({where})", t_stop / tau, k)
    if status == _ig.STATUS_MAX_STEPS:
        raise IntegrationError(f"step budget exhausted at s={t_stop / tau:.6g} ({where})", t_stop / tau, k)


def _build(params, kind, phi, k, s, raw, frozen_s=None):
    _check_status(raw, params.tau, k, phi)
    ys, ls, status, _, ns, nr, me = raw
    s_eval = s if frozen_s is None else np.full_like(s, frozen_s)
    b = branch_data(params, phi, s_eval)
    if kind == _ig.KIND_DIABATIC:
        th = b["theta"]
        c, sn = np.cos(th / 2), np.sin(th / 2)
        a = ys[:, 0] * c - ys[:, 1] * sn
        bb = ys[:, 1] * c + ys[:, 0] * sn
        frame = "diabatic"
    else:
        a, bb = ys[:, 0], ys[:, 1]
        frame = "adiabatic"
    P, X = _labelled_probabilities(a, bb, b["eps_hat"])
    return Trajectory(
        k=k, phi=float(phi), frame=frame, s=s, amplitudes=ys, log2scale=ls,
        survival=P, excitation=X, stats=IntegratorStats(ns, nr, me, status),
    )


def _prepare(params, ks, phis, kind, frozen_s=None):
    rps, cps, y0s = [], [], []
    for phi in phis:
        rp, cp = _mode_constants(params, float(phi), frozen_s)
        rps.append(rp)
        cps.append(cp)
        if kind == _ig.KIND_DIABATIC:
            y0s.append(_initial_diabatic(params, float(phi)))
        else:
            y0s.append((1.0 + 0j, 0.0 + 0j))
    return np.array(rps), np.array(cps), y0s


def _check_exclusion(params, phis, ks):
    bad = np.abs(np.asarray(phis) - params.alpha) < EP_EXCLUSION
    if np.any(bad):
        i = int(np.argmax(bad))
        who = f"k={ks[i]}" if ks is not None else f"phi={phis[i]!r}"
        raise EPExclusionError(
            f"{who} lies within {EP_EXCLUSION:.3g} rad of the exceptional point; "
            "use the diabatic engine"
        )


def integrate_modes(
    params: ChainParams,
    ks=None,
    sample_grid=None,
    *,
    phis=None,
    engine: str = "diabatic",
    rtol: float = RTOL,
    atol: float = ATOL,
    max_steps: int = MAX_STEPS,
    workers: int | None = 1,
    frozen_at: float | None = None,
) -> list[Trajectory]:
    """Integrate several modes (integer ``ks`` or continuous ``phis``)."""
    s = _sample_grid(sample_grid)
    if phis is None:
        ks = list(range(1, params.n_modes + 1)) if ks is None else [int(k) for k in ks]
        phis = [float(_phi_of(params, k, None)) for k in ks]
    else:
        if ks is not None:
            raise ParameterError("pass either ks or phis, not both")
        phis = [float(p) for p in np.atleast_1d(phis)]
        if any(not 0.0 < p < math.pi for p in phis):
            raise ParameterError("continuous angles must lie in (0, pi)")
    if engine == "diabatic":
        kind = _ig.KIND_DIABATIC
        if frozen_at is not None:
            raise ParameterError("the frozen-quench hook is only defined for the adiabatic engine")
    elif engine == "adiabatic":
        kind = _ig.KIND_ADIABATIC
        _check_exclusion(params, phis, ks)
    else:
        raise ParameterError(f"unknown engine {engine!r}")
    rps, cps, y0s = _prepare(params, ks, phis, kind, frozen_at)
    raws = _dispatch(kind, rps, cps, y0s, s * params.tau, rtol, atol, max_steps, workers)
    out = []
    for i, raw in enumerate(raws):
        k = None if ks is None else ks[i]
        out.append(_build(params, kind, phis[i], k, s, raw, frozen_at))
    return out


def integrate_diabatic(params: ChainParams, k=None, sample_grid=None, *, phi=None, **kw) -> Trajectory:
    """Integrate one mode in the fixed basis.  ``sample_grid`` is in ``s = t/tau``."""
    if phi is not None:
        return integrate_modes(params, None, sample_grid, phis=[phi], **kw)[0]
    return integrate_modes(params, [k], sample_grid, **kw)[0]


def integrate_adiabatic(
    params: ChainParams, k=None, sample_grid=None, *, phi=None, frozen_at=None, **kw
) -> Trajectory:
    """Integrate one mode in the instantaneous eigenbasis.

    ``frozen_at`` (a value of ``s``) holds the field constant at that point
    and switches off the basis-rotation coupling; it exists for testing.
    """
    kw.update(engine="adiabatic", frozen_at=frozen_at)
    if phi is not None:
        return integrate_modes(params, None, sample_grid, phis=[phi], **kw)[0]
    return integrate_modes(params, [k], sample_grid, **kw)[0]


def final_excitations(
    params: ChainParams, engine: str = "diabatic", *, phis=None, workers: int | None = 1, **kw
):
    """``(P, 1-P)`` at ``s = 1`` for every mode (or every angle in ``phis``)."""
    trajs = integrate_modes(
        params, None, [0.0, 1.0], phis=phis, engine=engine, workers=workers, **kw
    )
    P = np.array([t.final_survival for t in trajs])
    X = np.array([t.final_excitation for t in trajs])
    return P, X


@dataclass(frozen=True)
class GroundStateResult:
    p_gs: float
    log_p_gs: float
    survival: np.ndarray
    excitation: np.ndarray


def ground_state_probability(
    params: ChainParams, engine: str = "diabatic", sample_grid=None, *, workers: int | None = 1, **kw
) -> GroundStateResult:
    """Product of final per-mode survival probabilities, summed in log space in ascending k."""
    if sample_grid is not None:
        _sample_grid(sample_grid)
    P, X = final_excitations(params, engine, workers=workers, **kw)
    return ground_state_from_modes(P, X)


def ground_state_from_modes(P, X=None) -> GroundStateResult:
    P = np.asarray(P, dtype=float)
    X = 1.0 - P if X is None else np.asarray(X, dtype=float)
    total = 0.0
    for x in X:
        total += math.log1p(-x) if x < 1.0 else -math.inf
    return GroundStateResult(math.exp(total), total, P, X)


@dataclass(frozen=True)
class KinkReport:
    """Expected kink number.

    ``number`` counts both members of every ``(k, -k)`` pair, so it equals
    twice ``positive_branch_sum``; ``density = number / N``.
    """

    number: float
    density: float
    excitation: np.ndarray
    positive_branch_sum: float = field(default=0.0)


def kink_number(final_survival=None, *, excitation=None) -> KinkReport:
    """Kink statistics from the ``N/2`` final survival probabilities (or excitations)."""
    if excitation is None:
        if final_survival is None:
            raise ParameterError("final survival probabilities are required")
        x = 1.0 - np.asarray(final_survival, dtype=float)
    else:
        x = np.asarray(excitation, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ParameterError("expected a non-empty 1-d list of per-mode values")
    if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
        raise ParameterError("probabilities must lie in [0, 1]")
    half = 0.0
    for xi in x:
        half += float(xi)
    N = 2 * x.size
    return KinkReport(number=2 * half, density=2 * half / N, excitation=x, positive_branch_sum=half)


@dataclass(frozen=True)
class TDLDensity:
    density: float
    error_estimate: float
    converged: bool
    M: int


def kink_density_tdl(
    params: ChainParams, M_samples: int | None = None, *, tol: float = 1e-3, workers: int | None = 1, **kw
) -> TDLDensity:
    """``(1/pi) * integral_0^pi (1 - P(phi, tau)) dphi`` by the midpoint rule.

    The midpoints ``pi (j - 1/2)/M`` coincide with the mode angles of a chain
    of ``N = 2M`` sites.  The error estimate is the difference between the
    two interleaved half-rules (odd and even nodes); ``converged`` compares it
    with ``tol`` relative to the result (absolute below ``tol * 1e-3``).
    """
    M = params.n_modes if M_samples is None else int(M_samples)
    if M < 64:
        raise ParameterError("at least 64 quadrature nodes are required")
    phis = math.pi * (np.arange(1, M + 1) - 0.5) / M
    _, X = final_excitations(params, phis=phis, workers=workers, **kw)
    n = sum(float(x) for x in X) / M
    odd = sum(float(x) for x in X[0::2]) / len(X[0::2])
    even = sum(float(x) for x in X[1::2]) / len(X[1::2])
    err = abs(odd - even) / 2
    return TDLDensity(n, err, err <= max(tol * abs(n), tol * 1e-3), M)


@dataclass(frozen=True)
class ExcitationSurface:
    axis: str
    axis_values: np.ndarray
    phi: np.ndarray
    s_eval: np.ndarray
    excitation: np.ndarray
    valid: np.ndarray
    errors: list


def excitation_surface(
    params: ChainParams,
    time_selector: str,
    axis_values,
    phis,
    *,
    axis: str = "delta",
    workers: int | None = 1,
    **kw,
) -> ExcitationSurface:
    """Excitation ``1 - P`` on a grid of (delta or alpha) x phi.

    ``time_selector`` is ``"at_tc"`` (the exceptional-point time of each
    row) or ``"at_tau"``.  On the ``alpha`` axis the modulus
    ``|g + i delta|`` of ``params`` is held fixed.  Cells that cannot be
    evaluated are set to NaN and flagged invalid; the scan continues.
    """
    if time_selector not in ("at_tc", "at_tau"):
        raise ParameterError("time_selector must be 'at_tc' or 'at_tau'")
    if axis not in ("delta", "alpha"):
        raise ParameterError("axis must be 'delta' or 'alpha'")
    vals = np.asarray(axis_values, dtype=float)
    phis = np.asarray(phis, dtype=float)
    out = np.full((vals.size, phis.size), np.nan)
    s_eval = np.full(vals.size, np.nan)
    errors = []
    mag = abs(params.G)
    for i, v in enumerate(vals):
        try:
            if axis == "delta":
                p = params.replace(delta=float(v))
            else:
                p = params.replace(g=mag * math.cos(v), delta=mag * math.sin(v))
        except ParameterError as e:
            errors.append((i, None, str(e)))
            continue
        if time_selector == "at_tau":
            se = 1.0
        else:
            r = abs(p.G)
            if r <= 1.0:
                errors.append((i, None, "no exceptional point during the quench"))
                continue
            se = 1.0 - 1.0 / r
        s_eval[i] = se
        grid = [0.0, se] if se > 0 else [0.0]
        try:
            row = integrate_modes(p, None, grid, phis=phis, workers=workers, **kw)
            out[i] = [tr.excitation[-1] for tr in row]
            continue
        except (IntegrationError, ParameterError):
            pass
        # isolate the failing cells
        for j, ph in enumerate(phis):
            try:
                tr = integrate_modes(p, None, grid, phis=[ph], workers=1, **kw)[0]
                out[i, j] = tr.excitation[-1]
            except (IntegrationError, ParameterError) as e:
                errors.append((i, j, str(e)))
    return ExcitationSurface(axis, vals, phis, s_eval, out, np.isfinite(out), errors)
