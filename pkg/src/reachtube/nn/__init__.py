"""Neural operator stack: autodiff tape, spectral and attention layers, training."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .fourier import fft2, ifft2, spectral_conv
from .models import FNOConfig, OperatorModel, TNOConfig, galerkin_attention
from .tensor import Tensor
from .training import Adam, TrainingError, mse_loss, rel_l2, train

__all__ = [
    "Tensor",
    "fft2",
    "ifft2",
    "spectral_conv",
    "galerkin_attention",
    "FNOConfig",
    "TNOConfig",
    "OperatorModel",
    "Adam",
    "TrainingError",
    "train",
    "mse_loss",
    "rel_l2",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointError",
]
