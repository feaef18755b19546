"""Fragile key-controlled watermarking of model checkpoints.

Public API is re-exported here; submodules stay importable for the pieces
that rarely matter outside tests.
"""

from .errors import (
    CapacityExceededError,
    ContainerFormatError,
    ExponentConvergenceError,
    KeyFormatError,
    NonFiniteParameterError,
    WhstampError,
)
from .attacks import AttackReport, AttackSpec, apply_attack, run_experiment, sweep_gaussian
from .container import flatten, load_container, restore, save_container
from .core import VerificationReport, WatermarkConfig, embed, extract, verify
from .keys import RandomStream, SeedValue, WatermarkKey, derive_seed, derive_subseed
from .plan import capacity, recommend_payload_bits

__version__ = "0.1.0"

__all__ = [
    "WhstampError",
    "ContainerFormatError",
    "NonFiniteParameterError",
    "CapacityExceededError",
    "ExponentConvergenceError",
    "KeyFormatError",
    "WatermarkKey",
    "SeedValue",
    "RandomStream",
    "derive_seed",
    "derive_subseed",
    "WatermarkConfig",
    "VerificationReport",
    "embed",
    "extract",
    "verify",
    "capacity",
    "recommend_payload_bits",
    "save_container",
    "load_container",
    "flatten",
    "restore",
    "AttackSpec",
    "AttackReport",
    "apply_attack",
    "run_experiment",
    "sweep_gaussian",
    "__version__",
]
