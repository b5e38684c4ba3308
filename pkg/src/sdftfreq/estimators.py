"""Coarse peak search and three-bin fine frequency estimators.

All three fine estimators share the real part of the bin difference ratio

    Re[(R[k-1] - R[k+1]) / (2 R[k] - R[k-1] - R[k+1])]

and differ only in the scale applied to it:

* ``jacobsen``: no correction.
* ``candan``: ``tan(pi/N) / (pi/N)``.
* ``proposed``: ``(1 + r)**2 / (4 r) * tan(pi/N) / (pi/N)``, which also undoes
  the damping of a guaranteed-stable sliding DFT with factor ``r``.

The ratio is insensitive to a common complex gain on the three bins, so
tone amplitude and phase never enter the computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigMismatchError, DegenerateSpectrumError, NotWarmedUpError
from .sdft import SpectrumSnapshot

ESTIMATORS = ("proposed", "candan", "jacobsen")

DEGENERATE_THRESHOLD = 1e-300
KERNEL_SINGULAR_THRESHOLD = 1e-12


@dataclass(frozen=True)
class EstimatorParams:
    n_bins: int
    damping: float = 0.9

    def check(self, spectrum: SpectrumSnapshot):
        if spectrum.n_bins != self.n_bins or spectrum.damping != self.damping:
            raise ConfigMismatchError(
                f"estimator expects N={self.n_bins}, r={self.damping} but spectrum has "
                f"N={spectrum.n_bins}, r={spectrum.damping}"
            )


@dataclass(frozen=True)
class EstimateResult:
    peak_index: int
    delta: float
    omega: float
    estimator_id: str
    n_bins: int
    freq_hz: Optional[float] = None
    clamped: bool = False


def _expm1_complex(z):
    # expm1 for complex arguments; keeps relative accuracy near z = 0
    a, b = np.real(z), np.imag(z)
    return (np.expm1(a) * np.cos(b) - 2.0 * np.sin(b / 2) ** 2) + 1j * np.exp(a) * np.sin(b)


def kernel_sum(alpha, n_bins, damping):
    """Explicit N-term sum ``sum_n r**n * exp(j*2*pi*alpha*n/N)``."""
    alpha = np.asarray(alpha, dtype=float)
    n = np.arange(n_bins)
    terms = damping**n * np.exp(2j * np.pi * np.multiply.outer(alpha, n) / n_bins)
    return terms.sum(axis=-1)


def kernel_f(alpha, n_bins, damping):
    """Noiseless damped-DFT response at ``alpha`` bins from the tone.

    Uses the geometric-series closed form
    ``(1 - r**N * exp(j*2*pi*alpha)) / (1 - r * exp(j*2*pi*alpha/N))``
    and falls back to the explicit sum where the denominator vanishes
    (``r = 1`` and ``alpha`` a multiple of ``N``). Accepts scalars or arrays.
    """
    alpha_arr = np.asarray(alpha, dtype=float)
    log_r = math.log(damping)
    num = -_expm1_complex(n_bins * log_r + 2j * np.pi * alpha_arr)
    den = -_expm1_complex(log_r + 2j * np.pi * alpha_arr / n_bins)
    singular = np.abs(den) <= KERNEL_SINGULAR_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = num / den
    if np.any(singular):
        out = np.where(singular, kernel_sum(alpha_arr, n_bins, damping), out)
    if out.ndim == 0:
        return complex(out)
    return out


def tan_correction(n_bins):
    x = math.pi / n_bins
    return math.tan(x) / x


def damping_correction(damping):
    return (1.0 + damping) ** 2 / (4.0 * damping)


def estimator_scale(which, n_bins, damping=1.0):
    """Multiplier applied to the raw difference ratio by each estimator."""
    if which == "jacobsen":
        return 1.0
    if which == "candan":
        damping = 1.0
    elif which != "proposed":
        raise ValueError(f"unknown estimator {which!r}; choose from {ESTIMATORS}")
    # evaluated in this order so that r = 1 reproduces candan bit for bit
    return damping_correction(damping) * tan_correction(n_bins)


def _check_valid(spectrum):
    if not spectrum.valid:
        raise NotWarmedUpError(
            f"spectrum has seen {spectrum.samples_seen} of the {spectrum.n_bins} samples "
            "needed to fill the window"
        )


def coarse_peak(spectrum: SpectrumSnapshot) -> int:
    """Index of the largest-magnitude bin; ties go to the smallest index."""
    _check_valid(spectrum)
    return int(np.argmax(np.abs(spectrum.bins)))


def difference_ratio(spectrum: SpectrumSnapshot, peak: int) -> float:
    _check_valid(spectrum)
    n = spectrum.n_bins
    left = complex(spectrum.bins[(peak - 1) % n])
    centre = complex(spectrum.bins[peak % n])
    right = complex(spectrum.bins[(peak + 1) % n])
    den = 2 * centre - left - right
    if abs(den) < DEGENERATE_THRESHOLD:
        raise DegenerateSpectrumError(f"no curvature at peak bin {peak}: spectrum is flat")
    return ((left - right) / den).real


def clamp_offset(delta):
    """Clamp to the half-bin domain; returns ``(value, was_clamped)``."""
    if delta > 0.5:
        return 0.5, True
    if delta < -0.5:
        return -0.5, True
    return delta, False


def _fine(spectrum, peak, scale, clamp):
    delta = scale * difference_ratio(spectrum, peak)
    return clamp_offset(delta)[0] if clamp else delta


def estimate_delta_proposed(spectrum, peak, params: EstimatorParams, clamp=True) -> float:
    params.check(spectrum)
    return _fine(spectrum, peak, estimator_scale("proposed", params.n_bins, params.damping), clamp)


def estimate_delta_candan(spectrum, peak, n_bins, clamp=True) -> float:
    return _fine(spectrum, peak, estimator_scale("candan", n_bins), clamp)


def estimate_delta_jacobsen(spectrum, peak, clamp=True) -> float:
    return _fine(spectrum, peak, estimator_scale("jacobsen", spectrum.n_bins), clamp)


def estimate(
    spectrum: SpectrumSnapshot,
    params: EstimatorParams,
    which: str = "proposed",
    sample_rate_hz: Optional[float] = None,
) -> EstimateResult:
    """Coarse peak search followed by the selected fine estimator."""
    if which not in ESTIMATORS:
        raise ValueError(f"unknown estimator {which!r}; choose from {ESTIMATORS}")
    params.check(spectrum)
    peak = coarse_peak(spectrum)
    if which == "proposed":
        raw = estimate_delta_proposed(spectrum, peak, params, clamp=False)
    elif which == "candan":
        raw = estimate_delta_candan(spectrum, peak, params.n_bins, clamp=False)
    else:
        raw = estimate_delta_jacobsen(spectrum, peak, clamp=False)
    delta, clamped = clamp_offset(raw)
    n = params.n_bins
    omega = 2 * math.pi * (peak + delta) / n
    freq_hz = None
    if sample_rate_hz is not None:
        freq_hz = bins_to_hz(peak + delta, n, sample_rate_hz)
    return EstimateResult(
        peak_index=peak,
        delta=delta,
        omega=omega,
        estimator_id=which,
        n_bins=n,
        freq_hz=freq_hz,
        clamped=clamped,
    )


def bins_to_hz(bins, n_bins, sample_rate_hz):
    """Fractional bin position to Hz, wrapped into ``[0, fs)``."""
    hz = np.mod(np.asarray(bins, dtype=float) * sample_rate_hz / n_bins, sample_rate_hz)
    hz = np.where(hz >= sample_rate_hz, 0.0, hz)
    return float(hz) if hz.ndim == 0 else hz


def estimate_batch(spectra, n_bins, damping, which):
    """Vectorised :func:`estimate` over the rows of a 2-D spectrum array.

    Returns ``(peak, delta, clamped, degenerate)`` arrays. Degenerate rows get
    ``delta = nan`` instead of raising.
    """
    spectra = np.asarray(spectra)
    rows = np.arange(spectra.shape[0])
    peak = np.argmax(np.abs(spectra), axis=1)
    left = spectra[rows, (peak - 1) % n_bins]
    centre = spectra[rows, peak]
    right = spectra[rows, (peak + 1) % n_bins]
    den = 2 * centre - left - right
    degenerate = np.abs(den) < DEGENERATE_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = estimator_scale(which, n_bins, damping) * ((left - right) / den).real
    clamped = (raw > 0.5) | (raw < -0.5)
    delta = np.clip(raw, -0.5, 0.5)
    delta[degenerate] = np.nan
    clamped &= ~degenerate
    return peak, delta, clamped, degenerate
