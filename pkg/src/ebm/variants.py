"""RBM variants: dropout on the hidden layer, real-valued visible units.

DropoutRbm disables a random subset of hidden units for each training
batch and rescales the weights once at inference time. GaussianRbm and
SigmoidRbm keep the Bernoulli hidden layer but make the visible chain
real-valued (linear unit-variance means and sigmoid means respectively),
so their Gibbs chains never sample visible states.
"""

import numpy as np

from .dataset import MODE_STANDARDIZED
from .errors import InvalidStateError
from .math import Rng
from .rbm import Rbm, RbmConfig

# Salt for the dedicated mask stream so that masks never perturb the
# sampling stream: a dropout model with drop_rate 0 reproduces the plain
# RBM trajectory bit for bit.
MASK_STREAM_SALT = 0x6D61736B  # "mask"


def dropout_mask(n: int, drop_rate: float, rng: Rng) -> np.ndarray:
    """Binary keep-mask of length n: entry j is 0 with probability drop_rate.

    Always consumes exactly n uniforms, so stream positions do not depend
    on the rate.
    """
    if not 0.0 <= drop_rate <= 1.0:
        raise ValueError("drop_rate must lie in [0, 1]")
    if n < 1:
        raise ValueError("mask length must be positive")
    return (rng.uniform(n) >= drop_rate).astype(np.float64)


class DropoutRbm(Rbm):
    """RBM whose hidden units are randomly dropped during training.

    A fresh mask is drawn per mini-batch from a dedicated stream and applied
    to every hidden probability of that batch, positive and negative phase
    alike; masked units therefore contribute zero gradient (weight decay
    still applies). After training, ``scale_for_inference`` multiplies W by
    the retention probability 1 - drop_rate exactly once.
    """

    kind = "dropout-rbm"

    def __init__(self, config: RbmConfig, drop_rate: float):
        if not 0.0 <= drop_rate <= 1.0:
            raise ValueError("drop_rate must lie in [0, 1]")
        super().__init__(config)
        self.drop_rate = float(drop_rate)
        self.inference_scaled = False
        self.mask_rng = Rng(config.seed ^ MASK_STREAM_SALT)
        self._mask = None

    def prob_h_given_v_dropout(self, v, r) -> np.ndarray:
        """Hidden conditional under an explicit keep-mask r (column j is
        zeroed where r_j = 0)."""
        if self.inference_scaled:
            raise InvalidStateError("model already scaled for inference")
        r = np.asarray(r, dtype=np.float64).reshape(-1)
        if r.shape[0] != self.n_hidden:
            raise ValueError(f"mask length {r.shape[0]} != {self.n_hidden} hidden units")
        return self.prob_h_given_v(v) * r

    def _begin_batch(self) -> None:
        self._mask = dropout_mask(self.n_hidden, self.drop_rate, self.mask_rng)

    def _hidden_probs_train(self, v) -> np.ndarray:
        return self.prob_h_given_v(v) * self._mask

    def fit(self, data, batch_size, epochs, callback=None):
        if self.inference_scaled:
            raise InvalidStateError("cannot train a model scaled for inference")
        return super().fit(data, batch_size, epochs, callback=callback)

    def scale_for_inference(self) -> "DropoutRbm":
        """Multiply W by the retention probability 1 - drop_rate, once."""
        if self.inference_scaled:
            raise InvalidStateError("scale_for_inference may only run once")
        self.W *= 1.0 - self.drop_rate
        self.inference_scaled = True
        return self


class GaussianRbm(Rbm):
    """RBM with linear Gaussian visible units of unit variance.

    Expects externally standardized data and keeps the standardization
    statistics from fit time so test data can be transformed identically.
    The visible conditional is the mean a + W.h with no sampling; the
    hidden conditional is unchanged, evaluated on real inputs.
    """

    kind = "gaussian-rbm"

    def __init__(self, config: RbmConfig):
        super().__init__(config)
        self.feature_mean = np.zeros(config.n_visible)
        self.feature_std = np.ones(config.n_visible)

    def prob_v_given_h(self, h) -> np.ndarray:
        h = self._as_hidden_batch(h)
        return self.a + h @ self.W.T

    def _sample_visible(self, pv) -> np.ndarray:
        return pv

    def _check_data_mode(self, mode: str) -> None:
        if mode != MODE_STANDARDIZED:
            raise InvalidStateError(
                f"Gaussian visibles need standardized data, got {mode!r}"
            )

    def _bind_data(self, data) -> None:
        if data.feature_mean is not None:
            self.feature_mean = np.asarray(data.feature_mean, dtype=np.float64).copy()
            self.feature_std = np.asarray(data.feature_std, dtype=np.float64).copy()


class SigmoidRbm(Rbm):
    """RBM whose visible chain stays at the sigmoid means.

    Training is identical to the plain RBM except that the visible states
    of the CD chain are the conditional probabilities themselves; nothing
    on the visible side is ever Bernoulli-sampled. Inputs must lie in
    [0, 1] (raw or binarized mode).
    """

    kind = "sigmoid-rbm"

    def _sample_visible(self, pv) -> np.ndarray:
        return pv
