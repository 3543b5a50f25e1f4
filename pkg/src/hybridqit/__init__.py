"""Hybrid qubit/qudit information transfer: state algebra, transfer
protocols, a linear-optics model of the photonic setup and counting
statistics."""

__version__ = "0.1.0"

from . import hilbert, photonics, protocols, stats  # noqa: E402,F401
from .hilbert import DensityMatrix, GateMatrix, HybridState  # noqa: E402,F401
from .protocols import (  # noqa: E402,F401
    FeedForward, PostSelect, merge, qit_2to2, qit_2to4, qit_4to2, split, synthesize_gate,
)
