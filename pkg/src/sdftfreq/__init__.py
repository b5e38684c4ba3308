"""Damped sliding DFT and three-bin interpolating frequency estimators."""

from .bench import ExperimentSpec, TrialStats, emit_csv, run_experiment, run_trial
from .errors import (
    ConfigError,
    ConfigMismatchError,
    DegenerateSpectrumError,
    InvalidSpecError,
    LengthMismatchError,
    NotWarmedUpError,
    SdftError,
)
from .estimators import (
    ESTIMATORS,
    EstimateResult,
    EstimatorParams,
    coarse_peak,
    estimate,
    estimate_delta_candan,
    estimate_delta_jacobsen,
    estimate_delta_proposed,
    kernel_f,
)
from .sdft import SdftConfig, SlidingDFT, SpectrumSnapshot, damped_dft, direct_damped_dft
from .signals import NO_NOISE, NoiseSpec, ToneSpec, add_awgn, gen_tone

__version__ = "0.1.0"
