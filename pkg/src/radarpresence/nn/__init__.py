"""Minimal dense-tensor NN engine: explicit forward/backward per layer."""

from . import ops
from .adamax import Adamax, adamax_step
from .layers import (
    BatchNorm1d,
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    LeakyReLU,
    Reshape,
    Sequential,
    Sigmoid,
)

__all__ = [
    "ops",
    "Adamax",
    "adamax_step",
    "Conv2d",
    "ConvTranspose2d",
    "BatchNorm1d",
    "BatchNorm2d",
    "Dense",
    "Flatten",
    "Reshape",
    "LeakyReLU",
    "Sigmoid",
    "Sequential",
]
