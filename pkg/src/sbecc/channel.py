"""BPSK modulation and seedable AWGN / Rayleigh channels.

Randomness comes from :class:`RngStream`, a ``(seed, stream_id)`` pair that
maps to a PCG64 generator through ``numpy.random.SeedSequence``. Gaussian
draws use numpy's ziggurat sampler; for a fixed numpy major version the
sample sequence of a stream never changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "as_generator",
    "bpsk_modulate",
    "ebno_to_sigma",
    "awgn_transmit",
    "rayleigh_transmit",
    "RAYLEIGH_SCALE",
]

RAYLEIGH_SCALE = 1.0


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by a base seed and a stream id.

    ``stream_id`` may be an int or a tuple of ints, so callers can key
    streams hierarchically, e.g. ``(snr_index, block_index)``.
    """

    seed: int
    stream_id: int | tuple[int, ...] = 0

    def generator(self) -> np.random.Generator:
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "RngStream":
        base = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return RngStream(self.seed, base + tuple(key))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator, or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot make a random generator from {type(rng).__name__}")


def bpsk_modulate(x) -> np.ndarray:
    """Bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def ebno_to_sigma(ebno_db: float, rate: float) -> float:
    """Noise std-dev for unit-energy BPSK at the given Eb/N0 (dB) and code rate."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if not math.isfinite(ebno_db):
        raise ValueError("ebno_db must be finite")
    return 1.0 / math.sqrt(2.0 * rate * 10.0 ** (ebno_db / 10.0))


def _check_sigma(sigma_ch: float) -> None:
    if not sigma_ch >= 0.0:
        raise ValueError(f"channel sigma must be non-negative, got {sigma_ch}")


def awgn_transmit(x_s, sigma_ch: float, rng) -> np.ndarray:
    """``y = x_s + z`` with ``z ~ N(0, sigma_ch^2)`` i.i.d."""
    _check_sigma(sigma_ch)
    x_s = np.asarray(x_s, dtype=np.float64)
    if sigma_ch == 0.0:
        return x_s.copy()
    return x_s + sigma_ch * as_generator(rng).standard_normal(x_s.shape)


def rayleigh_transmit(x_s, sigma_ch: float, rng, scale: float = RAYLEIGH_SCALE) -> np.ndarray:
    """``y = h * x_s + z`` with Rayleigh fading ``h`` and AWGN ``z``.

    Fading uses inverse-CDF sampling ``scale * sqrt(-2 ln u)`` with ``u`` in
    (0, 1]; the fading draws come first on the stream, then the noise. The
    receiver gets ``y`` as is, without fading compensation.
    """
    _check_sigma(sigma_ch)
    x_s = np.asarray(x_s, dtype=np.float64)
    gen = as_generator(rng)
    u = 1.0 - gen.random(x_s.shape)
    h = scale * np.sqrt(-2.0 * np.log(u))
    y = h * x_s
    if sigma_ch > 0.0:
        y = y + sigma_ch * gen.standard_normal(x_s.shape)
    return y
