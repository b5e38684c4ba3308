"""Test-signal synthesis: complex tones and seeded circular complex AWGN."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError

NO_NOISE = math.inf


@dataclass(frozen=True)
class ToneSpec:
    freq_hz: float
    sample_rate_hz: float
    n_samples: int
    amplitude: float = 1.0
    phase0: float = 0.0

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise InvalidSpecError(f"sample rate must be positive, got {self.sample_rate_hz!r}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise InvalidSpecError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if not self.amplitude > 0:
            raise InvalidSpecError(f"amplitude must be positive, got {self.amplitude!r}")

    @property
    def omega(self):
        """Angular frequency in radians/sample, after wrapping into [0, fs)."""
        return 2 * math.pi * (self.freq_hz % self.sample_rate_hz) / self.sample_rate_hz


@dataclass(frozen=True)
class NoiseSpec:
    """``snr_db = inf`` means no noise at all."""

    snr_db: float
    seed: int = 0

    def variance(self, amplitude):
        """Total complex noise power; half of it goes to each quadrature."""
        return amplitude**2 * 10.0 ** (-self.snr_db / 10.0)


def gen_tone(spec: ToneSpec) -> np.ndarray:
    n = np.arange(int(spec.n_samples))
    return spec.amplitude * np.exp(1j * (spec.omega * n + spec.phase0))


def complex_noise(n, variance, seed):
    """Circular complex Gaussian noise, ``variance / 2`` per quadrature.

    Draws are interleaved per sample so a prefix of the stream does not
    depend on ``n``.
    """
    rng = np.random.default_rng(seed)
    iq = rng.standard_normal((n, 2))
    return math.sqrt(variance / 2.0) * (iq[:, 0] + 1j * iq[:, 1])


def add_awgn(samples, tone_amplitude, noise: NoiseSpec) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.complex128)
    if math.isinf(noise.snr_db) and noise.snr_db > 0:
        return samples.copy()
    return samples + complex_noise(samples.shape[0], noise.variance(tone_amplitude), noise.seed)
