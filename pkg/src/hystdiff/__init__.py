"""Time-discrete simulation of hysteretic phase interfaces in bilinear
forward-backward diffusion, with fluctuation decomposition and convergence
diagnostics."""

from .config import ExperimentConfig, build_initial_state, parse_config, reference_config
from .convolve import convolve, kernel_power, make_convolver
from .kernels import exp_kernel, heat_kernel, jump_layer, ramp_heat_kernel, smoothed_sign
from .profile import (
    Grid,
    Profile,
    SimState,
    check_admissible,
    from_p,
    min_alpha,
    to_p,
)
from .scheme import LM, RM, ST, classify, run, step

__all__ = [
    "ExperimentConfig",
    "Grid",
    "Profile",
    "SimState",
    "LM",
    "RM",
    "ST",
    "build_initial_state",
    "check_admissible",
    "classify",
    "convolve",
    "exp_kernel",
    "from_p",
    "heat_kernel",
    "jump_layer",
    "kernel_power",
    "make_convolver",
    "min_alpha",
    "parse_config",
    "ramp_heat_kernel",
    "reference_config",
    "run",
    "smoothed_sign",
    "step",
    "to_p",
]

__version__ = "0.1.0"
