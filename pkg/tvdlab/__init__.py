"""
tvdlab - Noise-robust token losses, bound verification and a synthetic noisy benchmark
"""

from .models import LossKind, LossSpec, TrainConfig

__version__ = "0.1.0"

__all__ = ["LossKind", "LossSpec", "TrainConfig", "__version__"]
