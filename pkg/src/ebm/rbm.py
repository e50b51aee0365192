"""Bernoulli-Bernoulli restricted Boltzmann machine with CD-k training.

The model is a bipartite energy network: m visible units, n hidden units,
weight matrix W (m x n), visible bias a, hidden bias b. Hidden activations
optionally run at a temperature that divides the hidden pre-activation;
the visible side is never temperature-scaled.

Brute-force enumeration of the joint distribution (for small models) lives
here as well, as the independent check against the conditional formulas.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from .dataset import MODE_STANDARDIZED
from .errors import CapacityError, InvalidStateError
from .math import Rng, bernoulli_sample, sigmoid, softplus
from .metrics import TrainingHistory, pseudo_likelihood

logger = logging.getLogger(__name__)

# Joint enumeration covers 2**(m+n) configurations; hard cap.
BRUTE_FORCE_LIMIT = 20


def all_binary_vectors(k: int) -> np.ndarray:
    """All 2**k binary vectors as a (2**k, k) float matrix.

    Row index s encodes the vector bitwise: column i holds bit i of s, so
    row 0 is all zeros and row 2**k - 1 is all ones.
    """
    states = np.arange(2 ** k, dtype=np.int64)
    return ((states[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(np.float64)


@dataclass
class RbmConfig:
    """Hyperparameters of a single RBM.

    Args:
        n_visible: number of visible units (m).
        n_hidden: number of hidden units (n).
        steps: Gibbs steps per CD-k update.
        learning_rate: step size; 0 makes fit a no-op on the parameters.
        momentum: velocity retention in [0, 1).
        decay: L2 penalty on W (biases are never decayed).
        temperature: divisor on the hidden pre-activation, > 0.
        seed: seed for the model's sample stream.
    """

    n_visible: int
    n_hidden: int
    steps: int = 1
    learning_rate: float = 0.1
    momentum: float = 0.0
    decay: float = 0.0
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_visible < 1 or self.n_hidden < 1:
            raise ValueError("layer sizes must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")


class Rbm:
    """Restricted Boltzmann machine with binary visible and hidden units.

    Weights start at Normal(0, 0.01**2) drawn from the model's own seeded
    stream; biases and momentum buffers start at zero. All training and
    sampling consume ``self.rng``, so a fixed seed fixes the whole
    trajectory.
    """

    kind = "rbm"

    def __init__(self, config: RbmConfig):
        self.config = config
        self.rng = Rng(config.seed)
        m, n = config.n_visible, config.n_hidden
        self.W = self.rng.normal(m * n, std=0.01).reshape(m, n)
        self.a = np.zeros(m)
        self.b = np.zeros(n)
        self.velocity_W = np.zeros((m, n))
        self.velocity_a = np.zeros(m)
        self.velocity_b = np.zeros(n)
        self.history = TrainingHistory()

    # -- shape helpers -------------------------------------------------

    @property
    def n_visible(self) -> int:
        return self.config.n_visible

    @property
    def n_hidden(self) -> int:
        return self.config.n_hidden

    def _as_visible_batch(self, v) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        if v.shape[1] != self.n_visible:
            raise ValueError(
                f"expected {self.n_visible} visible columns, got {v.shape[1]}"
            )
        return v

    def _as_hidden_batch(self, h) -> np.ndarray:
        h = np.atleast_2d(np.asarray(h, dtype=np.float64))
        if h.shape[1] != self.n_hidden:
            raise ValueError(
                f"expected {self.n_hidden} hidden columns, got {h.shape[1]}"
            )
        return h

    # -- energy and probabilities ---------------------------------------

    def energy(self, v, h) -> float:
        """Configuration energy -a.v - b.h - v.W.h (temperature-free)."""
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        h = np.asarray(h, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.n_visible or h.shape[0] != self.n_hidden:
            raise ValueError(
                f"expected ({self.n_visible}, {self.n_hidden}) units, "
                f"got ({v.shape[0]}, {h.shape[0]})"
            )
        return float(-(self.a @ v) - (self.b @ h) - v @ self.W @ h)

    def prob_h_given_v(self, v) -> np.ndarray:
        """P(h_j = 1 | v) row by row; the hidden pre-activation is divided
        by the configured temperature."""
        v = self._as_visible_batch(v)
        return sigmoid(v @ self.W + self.b, self.config.temperature)

    def prob_v_given_h(self, h) -> np.ndarray:
        """P(v_i = 1 | h) row by row; never temperature-scaled."""
        h = self._as_hidden_batch(h)
        return sigmoid(h @ self.W.T + self.a)

    def free_energy(self, v) -> np.ndarray:
        """Per-sample free energy -a.v - sum_j softplus(b_j + (v W)_j)."""
        v = self._as_visible_batch(v)
        return -(v @ self.a) - softplus(v @ self.W + self.b).sum(axis=1)

    # -- sampling --------------------------------------------------------

    def gibbs_step(self, v):
        """One block Gibbs transition from v.

        Returns (ph, h, pv, v_next): hidden probabilities, sampled hidden
        states, visible probabilities, next visible states. Consumes the
        model rng.
        """
        v = self._as_visible_batch(v)
        ph = self.prob_h_given_v(v)
        h = bernoulli_sample(ph, self.rng)
        pv = self.prob_v_given_h(h)
        v_next = self._sample_visible(pv)
        return ph, h, pv, v_next

    def _sample_visible(self, pv) -> np.ndarray:
        # Bernoulli visibles; real-valued variants pass probabilities through.
        return bernoulli_sample(pv, self.rng)

    # -- training ----------------------------------------------------------

    def _check_data_mode(self, mode: str) -> None:
        if mode == MODE_STANDARDIZED:
            raise InvalidStateError(
                "Bernoulli visibles need data in [0, 1]; got standardized mode"
            )

    def _begin_batch(self) -> None:
        # Hook for per-batch setup (dropout resamples its mask here).
        pass

    def _hidden_probs_train(self, v) -> np.ndarray:
        # Hidden conditional as used inside fit; dropout masks it.
        return self.prob_h_given_v(v)

    def _cd_statistics(self, v0):
        """One CD-k pass from data v0.

        The positive phase pairs v0 with its hidden probabilities ph0. The
        chain then alternates sampled visible and hidden states for
        ``config.steps`` rounds; the final round keeps the visible and
        hidden probabilities (pv, ph) for the negative statistics instead
        of their samples. Returns (ph0, pv, ph).
        """
        k = self.config.steps
        ph0 = self._hidden_probs_train(v0)
        h = bernoulli_sample(ph0, self.rng)
        pv = ph = None
        for t in range(1, k + 1):
            pv = self.prob_v_given_h(h)
            v = self._sample_visible(pv)
            ph = self._hidden_probs_train(v)
            if t < k:
                h = bernoulli_sample(ph, self.rng)
        return ph0, pv, ph

    def _apply_update(self, v0, ph0, pv, ph) -> None:
        cfg = self.config
        batch = v0.shape[0]
        grad_w = (v0.T @ ph0 - pv.T @ ph) / batch - cfg.decay * self.W
        grad_a = (v0 - pv).sum(axis=0) / batch
        grad_b = (ph0 - ph).sum(axis=0) / batch
        self.velocity_W = cfg.momentum * self.velocity_W + cfg.learning_rate * grad_w
        self.velocity_a = cfg.momentum * self.velocity_a + cfg.learning_rate * grad_a
        self.velocity_b = cfg.momentum * self.velocity_b + cfg.learning_rate * grad_b
        self.W += self.velocity_W
        self.a += self.velocity_a
        self.b += self.velocity_b

    def _batch_pl(self, v0, mode: str) -> float:
        if mode == MODE_STANDARDIZED:
            return float("nan")
        shadow = (v0 > 0.5).astype(np.float64)
        return pseudo_likelihood(self, shadow, self.rng)

    def _check_finite(self) -> None:
        for name, arr in (("W", self.W), ("a", self.a), ("b", self.b)):
            if not np.isfinite(arr).all():
                raise InvalidStateError(f"non-finite values in {name} after update")

    def fit(self, data, batch_size: int, epochs: int, callback=None):
        """Train with CD-k over shuffled mini-batches.

        Per batch: CD statistics, then a momentum/decay update of W, a, b
        with the gradient averaged over the actual batch size. Reconstruction
        MSE (chain-end visible probabilities against the batch) and
        pseudo-likelihood are recorded per epoch as batch-size-weighted
        means. Returns the final epoch's (mse, pl) pair.

        ``callback``, when given, receives each epoch's history record as it
        is appended.
        """
        self._check_data_mode(data.mode)
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if epochs < 1:
            raise ValueError("epochs must be >= 1")
        self._bind_data(data)
        record = None
        for _ in range(epochs):
            started = time.perf_counter()
            sq_sum = 0.0
            pl_sum = 0.0
            seen = 0
            for v0, _labels in data.batches(batch_size, shuffle=True, rng=self.rng):
                self._begin_batch()
                ph0, pv, ph = self._cd_statistics(v0)
                self._apply_update(v0, ph0, pv, ph)
                sq_sum += np.sum((v0 - pv) ** 2)
                pl_sum += self._batch_pl(v0, data.mode) * v0.shape[0]
                seen += v0.shape[0]
            self._check_finite()
            elapsed_ms = int(round(1000.0 * (time.perf_counter() - started)))
            epoch_mse = sq_sum / (seen * self.n_visible)
            record = self.history.append_epoch(epoch_mse, pl_sum / seen, elapsed_ms)
            logger.debug(
                "%s epoch %d: mse=%.6g pl=%.6g", self.kind,
                record.epoch_index, record.mse, record.pl,
            )
            if callback is not None:
                callback(record)
        return record.mse, record.pl

    def _bind_data(self, data) -> None:
        # Hook for variants that capture dataset statistics at fit time.
        pass

    def reconstruct(self, data, batch_size: int):
        """One deterministic mean-field pass over the dataset.

        Each sample goes visible -> hidden probabilities -> visible
        probabilities with no sampling, so no rng state is consumed.
        Returns (rec_mse, reconstructions) in dataset order.
        """
        self._check_data_mode(data.mode)
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        parts = []
        sq_sum = 0.0
        for v, _labels in data.batches(batch_size):
            ph = self.prob_h_given_v(v)
            pv = self.prob_v_given_h(ph)
            sq_sum += np.sum((v - pv) ** 2)
            parts.append(pv)
        recon = np.vstack(parts)
        return sq_sum / recon.size, recon

    # -- brute-force oracle ----------------------------------------------

    def _check_capacity(self) -> None:
        total = self.n_visible + self.n_hidden
        if total > BRUTE_FORCE_LIMIT:
            raise CapacityError(
                f"enumeration needs 2**{total} configurations; "
                f"limit is 2**{BRUTE_FORCE_LIMIT}"
            )

    def _negative_energy_table(self) -> np.ndarray:
        # -E over the full configuration grid: rows enumerate v, columns h.
        V = all_binary_vectors(self.n_visible)
        H = all_binary_vectors(self.n_hidden)
        return (V @ self.a)[:, None] + (H @ self.b)[None, :] + V @ self.W @ H.T

    def log_partition_bruteforce(self) -> float:
        """log Z by exhaustive enumeration (log-sum-exp), m + n <= 20."""
        self._check_capacity()
        neg_e = self._negative_energy_table()
        top = neg_e.max()
        return float(top + np.log(np.exp(neg_e - top).sum()))

    def joint_table_bruteforce(self) -> np.ndarray:
        """Full joint distribution as a (2**m, 2**n) matrix, m + n <= 20.

        Indexing follows ``all_binary_vectors``: entry (s, t) is the
        probability of the visible vector encoding s with the hidden vector
        encoding t.
        """
        self._check_capacity()
        neg_e = self._negative_energy_table()
        top = neg_e.max()
        table = np.exp(neg_e - top)
        return table / table.sum()

    def joint_probability_bruteforce(self, v, h) -> float:
        """P(v, h) with the partition function enumerated exhaustively."""
        self._check_capacity()
        log_z = self.log_partition_bruteforce()
        return float(np.exp(-self.energy(v, h) - log_z))
