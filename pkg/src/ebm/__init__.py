"""Energy-based generative models: RBMs, variants, and deep belief networks.

The package trains restricted Boltzmann machines (plain, dropout,
Gaussian-visible, sigmoid-visible) and stacked deep belief networks with
contrastive divergence, evaluates them (reconstruction error,
pseudo-likelihood), persists them to a versioned binary container, and
exports weight mosaics and training reports. Everything is deterministic
for a fixed seed.
"""

from .dataset import (DatasetHandle, binarize, load_idx_images,
                      load_idx_labels, standardize, standardize_with,
                      write_idx_images, write_idx_labels)
from .dbn import Dbn, SoftmaxHead, softmax
from .errors import (CapacityError, EnergyModelError, FormatError,
                     InvalidStateError, UnsupportedVersionError)
from .math import Rng, bernoulli_sample, scale_unitary, sigmoid, softplus
from .metrics import (TrainingHistory, mse, pseudo_likelihood,
                      pseudo_likelihood_all_flips)
from .persistence import load, save
from .rbm import Rbm, RbmConfig, all_binary_vectors
from .variants import DropoutRbm, GaussianRbm, SigmoidRbm, dropout_mask
from .visual import (GrayImage, export_history_csv, plot_history, read_pgm,
                     tensor_to_image, weight_mosaic, write_pgm)

__version__ = "1.0.0"

__all__ = [
    "CapacityError", "DatasetHandle", "Dbn", "DropoutRbm", "EnergyModelError",
    "FormatError", "GaussianRbm", "GrayImage", "InvalidStateError", "Rbm",
    "RbmConfig", "Rng", "SigmoidRbm", "SoftmaxHead", "TrainingHistory",
    "UnsupportedVersionError", "all_binary_vectors", "bernoulli_sample",
    "binarize", "dropout_mask", "export_history_csv", "load",
    "load_idx_images", "load_idx_labels", "mse", "plot_history",
    "pseudo_likelihood", "pseudo_likelihood_all_flips", "read_pgm", "save",
    "scale_unitary", "sigmoid", "softmax", "softplus", "standardize",
    "standardize_with", "tensor_to_image", "weight_mosaic", "write_idx_images",
    "write_idx_labels", "write_pgm",
]
