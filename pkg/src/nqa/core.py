"""Run parameters, the momentum-mode grid and the complex quench schedule.

Units follow hbar = 1: ``J`` is an energy, ``tau`` an inverse energy, ``g`` and
``delta`` are dimensionless.  Only the positive-momentum branch
``k = 1 .. N/2`` is represented; the ``-k`` partner of every mode evolves
identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """Raised when run parameters violate the model's preconditions."""


@dataclass(frozen=True)
class ChainParams:
    J: float
    g: float
    delta: float
    tau: float
    N: int
    alpha: float = field(init=False)

    def __post_init__(self) -> None:
        if not (isinstance(self.N, (int, np.integer)) and not isinstance(self.N, bool)):
            raise ParameterError(f"N must be an integer, got {self.N!r}")
        if self.N < 4 or self.N % 4 != 0:
            raise ParameterError(f"N must be divisible by 4 (N/2 even), got N={self.N}")
        if not self.J > 0:
            raise ParameterError(f"J must be positive, got J={self.J}")
        if not self.g > 0:
            raise ParameterError(f"g must be positive, got g={self.g}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got tau={self.tau}")
        if not self.delta >= 0:
            raise ParameterError(f"delta must be non-negative, got delta={self.delta}")
        for name in ("J", "g", "delta", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", math.atan2(self.delta, self.g))

    @property
    def G(self) -> complex:
        """Initial complex field ``g + i delta``."""
        return complex(self.g, self.delta)

    @property
    def n_modes(self) -> int:
        return self.N // 2

    def replace(self, **changes) -> "ChainParams":
        kw = dict(J=self.J, g=self.g, delta=self.delta, tau=self.tau, N=self.N)
        kw.update(changes)
        return ChainParams(**kw)


def make_params(J: float, g: float, delta: float, tau: float, N: int) -> ChainParams:
    """Validate raw numbers and return a :class:`ChainParams`."""
    return ChainParams(J=float(J), g=float(g), delta=float(delta), tau=float(tau), N=N)


@dataclass(frozen=True)
class Mode:
    k: int
    phi: float


def mode_angle(N: int, k: int) -> Mode:
    if not 1 <= k <= N // 2:
        raise ParameterError(f"mode index k={k} outside 1..{N // 2}")
    return Mode(k=int(k), phi=math.pi * (2 * k - 1) / N)


def mode_angles(N: int) -> np.ndarray:
    """All positive-branch angles ``pi (2k-1)/N`` for ``k = 1..N/2``."""
    k = np.arange(1, N // 2 + 1)
    return np.pi * (2 * k - 1) / N


@dataclass(frozen=True)
class QuenchValue:
    re: float
    im: float

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


def schedule_g(params: ChainParams, t: float) -> QuenchValue:
    """Linear complex ramp ``(g + i delta)(1 - t/tau)``, identically zero after ``tau``."""
    if t < 0:
        raise ParameterError(f"time must be non-negative, got t={t}")
    if t >= params.tau:
        return QuenchValue(0.0, 0.0)
    r = 1.0 - t / params.tau
    return QuenchValue(params.g * r, params.delta * r)


def schedule_g_array(params: ChainParams, t) -> np.ndarray:
    """Vectorised :func:`schedule_g` returning complex values."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("time must be non-negative")
    r = np.where(t >= params.tau, 0.0, 1.0 - t / params.tau)
    return params.G * r
