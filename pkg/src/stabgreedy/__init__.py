"""Gamma-stabilized greedy kernel interpolation."""
from .errors import *  # noqa: F401,F403
from .geometry import (DomainKind, DomainSampler, PointCloud, fill_distance, sample,
                       separation_distance, uniformity_constant)
from .greedy import GreedyConfig, RunTrace, SelectionRule, StopReason, restricted_set, run, select_next
from .interpolant import GreedyModel, TargetFunction, load_model, new_model
from .kernels import Family, Kernel, parse_kernel, theoretical_power_rate

__version__ = "0.1.0"
