"""Minimal differentiable-operator core: layer modules with explicit
forward/backward passes, verified against central finite differences."""

from .core import Context, Module, Parameter, Sequential
from .layers import (
    GELU,
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    GlobalAvgPool1d,
    LayerNorm,
    MaxPool1d,
    MultiHeadAttention,
    PositionalEncoding,
    ReLU,
    SEBlock,
    Sigmoid,
    positional_encoding_table,
    softmax,
    weighted_cross_entropy,
)

__all__ = [
    "Context",
    "Module",
    "Parameter",
    "Sequential",
    "Conv1d",
    "BatchNorm1d",
    "GELU",
    "ReLU",
    "Sigmoid",
    "MaxPool1d",
    "GlobalAvgPool1d",
    "Dense",
    "Dropout",
    "LayerNorm",
    "MultiHeadAttention",
    "SEBlock",
    "PositionalEncoding",
    "positional_encoding_table",
    "softmax",
    "weighted_cross_entropy",
]
