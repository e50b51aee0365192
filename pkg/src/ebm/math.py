"""Deterministic numeric primitives and seeded random sampling.

Everything in here is 64-bit float math. The random generator is fully
specified in its docstring so that a given seed produces the same sample
stream on every platform and in any reimplementation.
"""

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF

# SplitMix64 constants (Steele, Lea & Flood; same generator as Java's
# SplittableRandom and the seeder recommended for the xoshiro family).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U64_GAMMA = np.uint64(_GAMMA)
_U64_MIX1 = np.uint64(_MIX1)
_U64_MIX2 = np.uint64(_MIX2)
_SHIFT_30 = np.uint64(30)
_SHIFT_27 = np.uint64(27)
_SHIFT_31 = np.uint64(31)
_SHIFT_11 = np.uint64(11)

_INV_2_53 = float(2.0 ** -53)

# Open-interval clamp bounds for sigmoid.
_SIGMOID_LO = np.finfo(np.float64).tiny
_SIGMOID_HI = float(np.nextafter(1.0, 0.0))


class Rng:
    """Seedable 64-bit pseudo-random generator (SplitMix64).

    The generator is the published SplitMix64 recurrence: the state is a
    64-bit counter advanced by the odd constant 0x9E3779B97F4A7C15 per draw,
    and each output is the finalizer

        z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
        z ^= z >> 27;  z *= 0x94D049BB133111EB;
        z ^= z >> 31;

    applied to the post-increment state (all arithmetic mod 2**64). Because
    the state is a plain counter, a block of n outputs is a pure function of
    (state, n) and is generated vectorized.

    Derived streams are fixed too:

    * ``uniform(n)`` maps each 64-bit output x to ``(x >> 11) * 2**-53``,
      a double in [0, 1), consumed in row-major order when reshaped.
    * ``normal(n)`` uses Box-Muller on consecutive output pairs (x0, x1):
      ``u1 = ((x0 >> 11) + 1) * 2**-53`` in (0, 1],
      ``u2 = (x1 >> 11) * 2**-53`` in [0, 1),
      yielding ``r*cos(2*pi*u2)`` then ``r*sin(2*pi*u2)`` with
      ``r = sqrt(-2*ln(u1))``.
    * ``below(bound)`` / ``integers_below(bound, n)`` reduce outputs with a
      plain modulo.

    Instances are single-owner: share nothing, seed independently instead.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def _next_block(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs as a uint64 array; advances the state."""
        start = self.state
        counters = (np.arange(1, n + 1, dtype=np.uint64) * _U64_GAMMA
                    + np.uint64(start))
        z = counters
        z = (z ^ (z >> _SHIFT_30)) * _U64_MIX1
        z = (z ^ (z >> _SHIFT_27)) * _U64_MIX2
        z = z ^ (z >> _SHIFT_31)
        self.state = (start + n * _GAMMA) & _MASK64
        return z

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles in [0, 1)."""
        return (self._next_block(n) >> _SHIFT_11).astype(np.float64) * _INV_2_53

    def normal(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """n standard-normal draws scaled to (mean, std), via Box-Muller."""
        pairs = (n + 1) // 2
        raw = self._next_block(2 * pairs)
        u1 = ((raw[0::2] >> _SHIFT_11).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[1::2] >> _SHIFT_11).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return mean + std * z[:n]

    def below(self, bound: int) -> int:
        """One integer in [0, bound) by modulo reduction."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def integers_below(self, bound: int, n: int) -> np.ndarray:
        """n integers in [0, bound), vectorized modulo reduction."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return (self._next_block(n) % np.uint64(bound)).astype(np.int64)


def scale_unitary(t):
    """Min-max scale an array into [0, 1]; constant input maps to all zeros."""
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        raise ValueError("scale_unitary requires a non-empty input")
    lo = t.min()
    hi = t.max()
    if hi == lo:
        return np.zeros_like(t)
    return (t - lo) / (hi - lo)


def sigmoid(x, temperature: float = 1.0):
    """Logistic function of x / temperature, clamped to the open (0, 1).

    Stable for |x / temperature| well past 700: the exponential is only ever
    taken of a non-positive argument.
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    z = np.asarray(x, dtype=np.float64) / temperature
    e = np.exp(-np.abs(z))
    p = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(p, _SIGMOID_LO, _SIGMOID_HI)


def softplus(x):
    """ln(1 + exp(x)), computed as max(x, 0) + log1p(exp(-|x|))."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def bernoulli_sample(probs, rng: Rng) -> np.ndarray:
    """Elementwise Bernoulli draw: 1.0 with probability probs, else 0.0.

    Consumes one uniform per entry in row-major order, so the stream
    position after the call depends only on ``probs.size``.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size and not ((probs >= 0.0) & (probs <= 1.0)).all():
        raise ValueError("bernoulli probabilities must lie in [0, 1]")
    u = rng.uniform(probs.size).reshape(probs.shape)
    return (u < probs).astype(np.float64)
