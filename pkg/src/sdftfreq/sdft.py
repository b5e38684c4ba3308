"""Guaranteed-stable (damped) sliding DFT.

The filter bank keeps all ``N`` bins of a damped DFT over the most recent
``N`` input samples. Every new sample updates each bin in constant time::

    R_k[n] = r * exp(j*2*pi*k/N) * R_k[n-1] + x[n] - r**N * x[n-N]

The pole sits at radius ``r`` so coefficient rounding cannot push it outside
the unit circle. Unrolling the recursion shows what the bins hold: with the
time index ``m`` running from ``-(N-1)`` (oldest sample) up to ``0`` (newest
sample),

    R[k] = sum_m x[m] * r**(-m) * exp(-j*2*pi*k*m/N)

i.e. the ordinary DFT kernel, referenced to the newest sample and damped by
sample age. :func:`damped_dft` evaluates exactly this sum in one batch, so the
streaming and batch routes can check each other.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .errors import InvalidSpecError, LengthMismatchError

NEVER = "never"

ResyncInterval = Union[int, Literal["never"], None]


@dataclass(frozen=True)
class SdftConfig:
    """Shape of the filter bank.

    ``resync_interval`` is the number of pushed samples between full batch
    recomputations of the bins. ``None`` selects the default of ``4 * n_bins``
    and ``"never"`` disables resynchronisation entirely.
    """

    n_bins: int
    damping: float = 0.9
    resync_interval: ResyncInterval = None

    def __post_init__(self):
        if int(self.n_bins) != self.n_bins or self.n_bins < 4:
            raise InvalidSpecError(f"n_bins must be an integer >= 4, got {self.n_bins!r}")
        object.__setattr__(self, "n_bins", int(self.n_bins))
        if not 0.0 < self.damping <= 1.0:
            raise InvalidSpecError(f"damping must lie in (0, 1], got {self.damping!r}")
        object.__setattr__(self, "damping", float(self.damping))
        interval = self.resync_interval
        if interval is None:
            interval = 4 * self.n_bins
        elif interval != NEVER:
            integral = isinstance(interval, numbers.Integral) and not isinstance(interval, bool)
            if not integral or interval < 1:
                raise InvalidSpecError(
                    f"resync_interval must be a positive integer or 'never', got {interval!r}"
                )
            interval = int(interval)
        object.__setattr__(self, "resync_interval", interval)


@dataclass(frozen=True)
class SpectrumSnapshot:
    """Immutable copy of the bins at one instant.

    ``valid`` is false while the sliding window still contains the zeros it
    was initialised with.
    """

    bins: np.ndarray
    n_bins: int
    damping: float
    samples_seen: int
    valid: bool = field(init=False)

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.complex128)
        if bins.shape != (self.n_bins,):
            raise LengthMismatchError(
                f"snapshot needs exactly {self.n_bins} bins, got shape {bins.shape}"
            )
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "valid", self.samples_seen >= self.n_bins)

    @classmethod
    def from_bins(cls, bins, damping=1.0):
        """Wrap an externally computed spectrum as a valid snapshot."""
        bins = np.asarray(bins)
        return cls(bins=bins, n_bins=len(bins), damping=damping, samples_seen=len(bins))


def damped_dft(x, damping):
    """Batch damped DFT over the last axis of ``x``.

    ``x[..., N-1]`` is the newest sample. Returns an array of the same shape
    whose entry ``k`` is ``sum_i r**i * exp(+j*2*pi*k*i/N) * x[..., N-1-i]``.
    Rows of a 2-D input are transformed independently and bit-identically to
    transforming them one at a time.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    by_age = x[..., ::-1]
    if damping != 1.0:
        by_age = by_age * damping ** np.arange(n)
    # unscaled inverse transform == sum_i y[i] * exp(+j*2*pi*k*i/N)
    return np.fft.ifft(by_age, axis=-1, norm="forward")


def direct_damped_dft(window, config: SdftConfig) -> SpectrumSnapshot:
    """Damped DFT of a full chronological window (oldest sample first)."""
    window = np.asarray(window, dtype=np.complex128)
    if window.shape != (config.n_bins,):
        raise LengthMismatchError(
            f"window must hold exactly {config.n_bins} samples, got shape {window.shape}"
        )
    return SpectrumSnapshot(
        bins=damped_dft(window, config.damping),
        n_bins=config.n_bins,
        damping=config.damping,
        samples_seen=config.n_bins,
    )


class SlidingDFT:
    """Streaming state of the damped sliding DFT.

    Not thread-safe: a single writer calls :meth:`push`. Snapshots handed out
    by :meth:`snapshot` are immutable and may be shared freely.
    """

    def __init__(self, config: SdftConfig):
        self.config = config
        n = config.n_bins
        r = config.damping
        self._twiddle = r * np.exp(2j * np.pi * np.arange(n) / n)
        self._r_n = r**n
        self.bins = np.zeros(n, dtype=np.complex128)
        self._delay = np.zeros(n, dtype=np.complex128)
        self._head = 0  # index of the oldest sample in the ring buffer
        self.samples_seen = 0

    @property
    def valid(self):
        return self.samples_seen >= self.config.n_bins

    def window(self):
        """Current delay-line contents, oldest sample first."""
        return np.concatenate((self._delay[self._head :], self._delay[: self._head]))

    def push(self, x):
        """Feed one sample and update every bin."""
        x = complex(x)
        oldest = self._delay[self._head]
        self._delay[self._head] = x
        self._head = (self._head + 1) % self.config.n_bins
        # comb term shared by all bins
        comb = x - self._r_n * oldest
        np.multiply(self.bins, self._twiddle, out=self.bins)
        self.bins += comb
        self.samples_seen += 1
        interval = self.config.resync_interval
        if interval != NEVER and self.samples_seen % interval == 0:
            self.resync()
        return self

    def extend(self, samples):
        for x in np.asarray(samples, dtype=np.complex128).ravel():
            self.push(x)
        return self

    def resync(self):
        """Recompute the bins from the delay line, discarding recursion drift."""
        self.bins = damped_dft(self.window(), self.config.damping)
        return self

    def snapshot(self) -> SpectrumSnapshot:
        return SpectrumSnapshot(
            bins=self.bins.copy(),
            n_bins=self.config.n_bins,
            damping=self.config.damping,
            samples_seen=self.samples_seen,
        )


def push_sample(state: SlidingDFT, x) -> SlidingDFT:
    return state.push(x)


def snapshot(state: SlidingDFT) -> SpectrumSnapshot:
    return state.snapshot()


def resync(state: SlidingDFT) -> SlidingDFT:
    return state.resync()
