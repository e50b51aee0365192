"""Deep belief network: stacked RBMs with greedy pretraining and an
optional softmax head fine-tuned by plain gradient descent.

Layer i's hidden size is layer i+1's visible size. Pretraining trains each
layer in isolation on the mean-field hidden probabilities of the layer
below; earlier layers are frozen while later ones train. Fine-tuning
attaches a softmax classification head and backpropagates cross-entropy
through every layer's mean-field sigmoid, updating the head, all weight
matrices and all hidden biases (visible biases play no part in the forward
pass and stay untouched).
"""

import logging
import time

import numpy as np

from .dataset import MODE_RAW, DatasetHandle
from .errors import InvalidStateError
from .math import Rng
from .metrics import TrainingHistory
from .rbm import Rbm, RbmConfig

logger = logging.getLogger(__name__)


def softmax(logits) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row maximum."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class SoftmaxHead:
    """Linear-softmax classification layer on top of a DBN."""

    def __init__(self, n_inputs: int, num_classes: int, learning_rate: float,
                 rng: Rng):
        if num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        self.num_classes = num_classes
        self.learning_rate = float(learning_rate)
        self.rng = rng
        self.U = rng.normal(n_inputs * num_classes, std=0.01).reshape(
            n_inputs, num_classes)
        self.c = np.zeros(num_classes)


class Dbn:
    """Stack of Bernoulli RBMs, greedily pretrained, optionally fine-tuned.

    Args:
        layer_sizes: unit counts, visible first; needs at least two entries.
        steps, learning_rate, momentum, decay, temperature: shared RBM
            hyperparameters applied to every layer.
        seed: layer i draws from its own stream seeded with seed + i, so a
            one-layer stack reproduces a plain RBM with the same seed
            exactly; a later fine-tune head uses seed + number-of-layers.
    """

    kind = "dbn"

    def __init__(self, layer_sizes, steps: int = 1, learning_rate: float = 0.1,
                 momentum: float = 0.0, decay: float = 0.0,
                 temperature: float = 1.0, seed: int = 0):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2:
            raise ValueError("need a visible size and at least one hidden size")
        self.seed = int(seed)
        self.layers = [
            Rbm(RbmConfig(
                n_visible=layer_sizes[i],
                n_hidden=layer_sizes[i + 1],
                steps=steps,
                learning_rate=learning_rate,
                momentum=momentum,
                decay=decay,
                temperature=temperature,
                seed=seed + i,
            ))
            for i in range(len(layer_sizes) - 1)
        ]
        self.head = None
        self.pretrained = False
        self.history = TrainingHistory()

    @property
    def layer_sizes(self):
        return [self.layers[0].n_visible] + [r.n_hidden for r in self.layers]

    @property
    def top_hidden(self) -> int:
        return self.layers[-1].n_hidden

    # -- unsupervised ------------------------------------------------------

    def fit_greedy(self, data, batch_size: int, epochs_per_layer: int,
                   callback=None):
        """Train the stack bottom-up, one layer at a time.

        Layer 0 trains on the dataset itself; each later layer trains on the
        frozen lower stack's mean-field hidden probabilities of the full
        dataset. Returns the final (mse, pl) pair of every layer.
        ``callback``, when given, receives (layer_index, record) per epoch.
        """
        current = data
        results = []
        for index, layer in enumerate(self.layers):
            logger.info("pretraining layer %d (%d -> %d)", index,
                        layer.n_visible, layer.n_hidden)
            wrapped = None
            if callback is not None:
                wrapped = lambda record, _i=index: callback(_i, record)
            results.append(layer.fit(current, batch_size, epochs_per_layer,
                                     callback=wrapped))
            if index + 1 < len(self.layers):
                probs = layer.prob_h_given_v(current.samples)
                current = DatasetHandle(probs, current.labels,
                                        feature_shape=(1, layer.n_hidden),
                                        mode=MODE_RAW)
        self.pretrained = True
        return results

    def transform(self, v) -> np.ndarray:
        """Deterministic mean-field pass to the top layer's probabilities."""
        p = self.layers[0]._as_visible_batch(v)
        for layer in self.layers:
            p = layer.prob_h_given_v(p)
        return p

    def reconstruct(self, v):
        """Mean-field up-pass then down-pass; returns (rec_mse, v')."""
        v = self.layers[0]._as_visible_batch(v)
        p = v
        for layer in self.layers:
            p = layer.prob_h_given_v(p)
        for layer in reversed(self.layers):
            p = layer.prob_v_given_h(p)
        return float(np.mean((v - p) ** 2)), p

    # -- supervised --------------------------------------------------------

    def supervised_gradients(self, v, labels):
        """Cross-entropy loss, accuracy and gradients for one batch.

        Backpropagates through the head and every layer's mean-field
        sigmoid (each at its configured temperature). Returns
        (loss, accuracy, head_grads, layer_grads) with head_grads = (dU, dc)
        and layer_grads a bottom-up list of (dW, db).
        """
        if self.head is None:
            raise InvalidStateError("attach a head via fine_tune first")
        v = self.layers[0]._as_visible_batch(v)
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        batch = v.shape[0]
        if labels.shape[0] != batch:
            raise ValueError(f"{labels.shape[0]} labels for {batch} samples")
        if labels.min() < 0 or labels.max() >= self.head.num_classes:
            raise ValueError("label outside [0, num_classes)")

        activations = [v]
        p = v
        for layer in self.layers:
            p = layer.prob_h_given_v(p)
            activations.append(p)
        logits = p @ self.head.U + self.head.c
        probs = softmax(logits)
        rows = np.arange(batch)
        loss = float(np.mean(-np.log(probs[rows, labels])))
        accuracy = float(np.mean(np.argmax(probs, axis=1) == labels))

        dz = probs.copy()
        dz[rows, labels] -= 1.0
        dz /= batch
        d_u = activations[-1].T @ dz
        d_c = dz.sum(axis=0)
        dp = dz @ self.head.U.T
        layer_grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            out = activations[i + 1]
            dpre = dp * out * (1.0 - out) / self.layers[i].config.temperature
            layer_grads[i] = (activations[i].T @ dpre, dpre.sum(axis=0))
            dp = dpre @ self.layers[i].W.T
        return loss, accuracy, (d_u, d_c), layer_grads

    def fine_tune(self, data, batch_size: int, epochs: int, num_classes: int,
                  learning_rate: float = 0.1, callback=None):
        """Attach (or reuse) a softmax head and run plain SGD epochs.

        Requires a pretrained stack and a labelled dataset. Records per-epoch
        mean cross-entropy and accuracy on the DBN's history and returns the
        records appended by this call.
        """
        if not self.pretrained:
            raise InvalidStateError("run fit_greedy before fine_tune")
        if data.labels is None:
            raise InvalidStateError("fine-tuning needs a labelled dataset")
        if batch_size < 1 or epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.head is None:
            self.head = SoftmaxHead(self.top_hidden, num_classes, learning_rate,
                                    Rng(self.seed + len(self.layers)))
        elif self.head.num_classes != num_classes:
            raise ValueError(
                f"head already has {self.head.num_classes} classes"
            )
        lr = self.head.learning_rate
        appended = []
        for _ in range(epochs):
            started = time.perf_counter()
            ce_sum = 0.0
            hit_sum = 0.0
            seen = 0
            for v, y in data.batches(batch_size, shuffle=True, rng=self.head.rng):
                loss, acc, (d_u, d_c), layer_grads = self.supervised_gradients(v, y)
                self.head.U -= lr * d_u
                self.head.c -= lr * d_c
                for layer, (d_w, d_b) in zip(self.layers, layer_grads):
                    layer.W -= lr * d_w
                    layer.b -= lr * d_b
                ce_sum += loss * v.shape[0]
                hit_sum += acc * v.shape[0]
                seen += v.shape[0]
            record = self.history.append_fine_tune(ce_sum / seen, hit_sum / seen)
            logger.debug("fine-tune epoch %d: ce=%.6g acc=%.4f (%.0f ms)",
                         record.epoch_index, record.cross_entropy,
                         record.accuracy,
                         1000.0 * (time.perf_counter() - started))
            appended.append(record)
            if callback is not None:
                callback(record)
        return appended

    def predict(self, v):
        """Class labels and softmax probabilities for a batch.

        Ties in the probabilities resolve to the lowest class index.
        """
        if self.head is None:
            raise InvalidStateError("predict needs a fine-tuned head")
        probs = softmax(self.transform(v) @ self.head.U + self.head.c)
        return np.argmax(probs, axis=1), probs
