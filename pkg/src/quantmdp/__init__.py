"""Quantized stationary policies for MDPs on continuous spaces.

Simulation, total-variation diagnostics and the closed-form bounds on the cost
loss incurred by replacing a stationary policy with its k-level
nearest-neighbour quantization.
"""

from ._kernels import BACKEND
from .core import (Box, CostSchedule, DeterministicPolicy, MdpModel, QuantizedPolicy,
                   RandomizedPolicy, Trajectory, policy_action, stage_cost)
from .quantizer import Codebook, build_uniform_net, nearest_level, quantize_policy, rate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Box", "CostSchedule", "DeterministicPolicy", "MdpModel", "QuantizedPolicy",
    "RandomizedPolicy", "Trajectory", "policy_action", "stage_cost", "Codebook",
    "build_uniform_net", "nearest_level", "quantize_policy", "rate", "__version__",
]
