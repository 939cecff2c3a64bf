"""Non-Hermitian quantum annealing of the transverse-field Ising chain, mode by mode."""

from .core import ChainParams, ParameterError, make_params, mode_angle, mode_angles, schedule_g

__all__ = ["ChainParams", "ParameterError", "make_params", "mode_angle", "mode_angles", "schedule_g"]
__version__ = "0.1.0"
