"""Quantitative evaluation: reconstruction error, pseudo-likelihood, history."""

from dataclasses import dataclass, field

import numpy as np

from .math import Rng, softplus


@dataclass
class EpochRecord:
    epoch_index: int
    mse: float
    pl: float
    wall_time_ms: int


@dataclass
class FineTuneRecord:
    epoch_index: int
    cross_entropy: float
    accuracy: float


@dataclass
class TrainingHistory:
    """Per-epoch training records owned by a model.

    ``epochs`` collects unsupervised (reconstruction MSE, pseudo-likelihood)
    records with 1-based strictly increasing indices; ``fine_tune_epochs``
    collects supervised (cross-entropy, accuracy) records.
    """

    epochs: list = field(default_factory=list)
    fine_tune_epochs: list = field(default_factory=list)

    def append_epoch(self, mse: float, pl: float, wall_time_ms: int) -> EpochRecord:
        record = EpochRecord(len(self.epochs) + 1, float(mse), float(pl),
                             int(wall_time_ms))
        self.epochs.append(record)
        return record

    def append_fine_tune(self, cross_entropy: float, accuracy: float) -> FineTuneRecord:
        record = FineTuneRecord(len(self.fine_tune_epochs) + 1,
                                float(cross_entropy), float(accuracy))
        self.fine_tune_epochs.append(record)
        return record


def mse(x, y) -> float:
    """Mean over all entries of (x - y)**2."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.mean((x - y) ** 2))


def _check_binary(v) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if v.size and not np.isin(v, (0.0, 1.0)).all():
        raise ValueError("pseudo-likelihood requires binary inputs")
    return v


def _log_sigmoid(x):
    return -softplus(-np.asarray(x, dtype=np.float64))


def pseudo_likelihood(rbm, v, rng: Rng) -> float:
    """Single-flip pseudo-likelihood estimate, averaged over a batch.

    For each sample one uniformly chosen bit is flipped and the sample is
    scored as ``m * log(sigmoid(F(flipped) - F(v)))`` with F the model free
    energy. Flipping a single random bit instead of all m keeps the cost at
    one extra free-energy pass per batch; the all-flips variant is
    ``pseudo_likelihood_all_flips``.
    """
    v = _check_binary(v)
    batch, m = v.shape
    flip = rng.integers_below(m, batch)
    v_flipped = v.copy()
    rows = np.arange(batch)
    v_flipped[rows, flip] = 1.0 - v_flipped[rows, flip]
    gap = rbm.free_energy(v_flipped) - rbm.free_energy(v)
    return float(np.mean(m * _log_sigmoid(gap)))


def pseudo_likelihood_all_flips(rbm, v) -> float:
    """Deterministic variant summing log-scores over every flip position."""
    v = _check_binary(v)
    batch, m = v.shape
    f_v = rbm.free_energy(v)
    total = np.zeros(batch)
    for i in range(m):
        v_flipped = v.copy()
        v_flipped[:, i] = 1.0 - v_flipped[:, i]
        total += _log_sigmoid(rbm.free_energy(v_flipped) - f_v)
    return float(np.mean(total))
