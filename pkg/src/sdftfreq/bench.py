"""Monte-Carlo bias / RMSE experiments over frequency, SNR and damping.

Every trial draws its noise from its own seed, derived from the experiment's
base seed, the operating point ``(freq_hz, snr_db)`` and the trial index. The
estimator and damping do not enter the seed, so every estimator sees the same
noisy records (common random numbers) and results do not depend on which
cells are run, in which order, or how trials are batched.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import struct
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DegenerateSpectrumError, InvalidSpecError
from .estimators import ESTIMATORS, bins_to_hz, estimate_batch
from .sdft import damped_dft
from .signals import NO_NOISE, complex_noise

AMPLITUDE = 1.0
CHUNK = 4096

CSV_HEADER = (
    "freq_hz",
    "snr_db",
    "damping",
    "estimator",
    "mean_estimate_hz",
    "bias_hz",
    "rmse_hz",
    "clamp_count",
    "trials",
)


def default_freqs():
    return tuple(30_100_000.0 + 100_000.0 * i for i in range(9))


@dataclass(frozen=True)
class ExperimentSpec:
    n_bins: int = 128
    sample_rate_hz: float = 128e6
    freq_list_hz: tuple = field(default_factory=default_freqs)
    damping_list: tuple = (0.9,)
    snr_db_list: tuple = (2.0, 3.0, NO_NOISE)
    trials: int = 10_000
    base_seed: int = 0
    estimators: tuple = ESTIMATORS
    randomize_phase: bool = False

    def __post_init__(self):
        for name in ("freq_list_hz", "damping_list", "snr_db_list", "estimators"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n_bins < 4:
            raise InvalidSpecError(f"n_bins must be >= 4, got {self.n_bins}")
        if not self.sample_rate_hz > 0:
            raise InvalidSpecError("sample_rate_hz must be positive")
        if self.trials < 1:
            raise InvalidSpecError(f"trials must be positive, got {self.trials}")
        if not 0 <= self.base_seed < 2**64:
            raise InvalidSpecError("base_seed must be an unsigned 64-bit integer")
        for r in self.damping_list:
            if not 0.0 < r <= 1.0:
                raise InvalidSpecError(f"damping {r} outside (0, 1]")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise InvalidSpecError(f"unknown estimators {unknown}; choose from {ESTIMATORS}")

    def offset_bins(self, freq_hz):
        """Signed distance in bins from ``freq_hz`` to its nearest bin centre."""
        pos = freq_hz * self.n_bins / self.sample_rate_hz
        return pos - round(pos)

    def check_offsets(self):
        """Warn about frequencies that sit on a half-bin boundary (``|delta| >= 0.5``)."""
        bad = [f for f in self.freq_list_hz if abs(self.offset_bins(f)) >= 0.5]
        for f in bad:
            warnings.warn(
                f"{f:.17g} Hz lies half a bin from the bin grid (N={self.n_bins}, "
                f"fs={self.sample_rate_hz:.17g}); the coarse peak is ambiguous",
                stacklevel=2,
            )
        return bad

    def cells(self):
        """Every ``(freq, snr, damping, estimator)`` cell, in CSV order.

        The baselines always run on an undamped spectrum, so they get one
        cell per operating point with ``damping = 1``.
        """
        out = []
        for est in sorted(self.estimators):
            dampings = sorted(set(self.damping_list)) if est == "proposed" else [1.0]
            for r in dampings:
                for snr in sorted(self.snr_db_list):
                    for f in sorted(self.freq_list_hz):
                        out.append((f, snr, r, est))
        return out


@dataclass(frozen=True)
class TrialStats:
    freq_hz: float
    snr_db: float
    damping: float
    estimator_id: str
    mean_estimate_hz: float
    bias_hz: float
    rmse_hz: float
    clamp_count: int
    trials: int
    failures: int = 0

    @property
    def bias_stderr(self):
        """Standard error of the Monte-Carlo mean (sample std with ddof=1)."""
        if self.trials < 2:
            return math.nan
        var = max(self.rmse_hz**2 - self.bias_hz**2, 0.0)
        return math.sqrt(var / (self.trials - 1))

    def sort_key(self):
        return (self.estimator_id, self.damping, self.snr_db, self.freq_hz)


class TrialOutcome(NamedTuple):
    estimate_hz: float
    clamped: bool


def derive_seed(base_seed, freq_hz, snr_db, trial):
    """Stable 64-bit seed for one trial at one operating point."""
    payload = struct.pack("<QddQ", base_seed, float(freq_hz), float(snr_db), trial)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def _records(freq_hz, snr_db, seeds, n_bins, sample_rate_hz, randomize_phase):
    """Noisy tone records, one row per seed, oldest sample first."""
    n = np.arange(n_bins)
    omega = 2 * math.pi * (freq_hz % sample_rate_hz) / sample_rate_hz
    if randomize_phase:
        phase = np.array([np.random.default_rng([s, 1]).uniform(0, 2 * math.pi) for s in seeds])
    else:
        phase = np.zeros(len(seeds))
    x = AMPLITUDE * np.exp(1j * (omega * n[None, :] + phase[:, None]))
    if not math.isinf(snr_db):
        variance = AMPLITUDE**2 * 10.0 ** (-snr_db / 10.0)
        x = x + np.stack([complex_noise(n_bins, variance, s) for s in seeds])
    return x


def _estimate_records(x, damping, estimator_id, n_bins, sample_rate_hz):
    spectra = damped_dft(x, damping)
    peak, delta, clamped, degenerate = estimate_batch(spectra, n_bins, damping, estimator_id)
    return bins_to_hz(peak + delta, n_bins, sample_rate_hz), clamped, degenerate


def _spectrum_damping(estimator_id, damping):
    return damping if estimator_id == "proposed" else 1.0


def run_trial(
    freq_hz,
    snr_db,
    damping,
    estimator_id,
    seed,
    *,
    n_bins=128,
    sample_rate_hz=128e6,
    randomize_phase=False,
) -> TrialOutcome:
    """One noisy record, one estimate.

    The proposed estimator reads a damped sliding-DFT spectrum with factor
    ``damping``; the baselines read the undamped DFT.
    """
    if estimator_id not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator_id!r}")
    r = _spectrum_damping(estimator_id, damping)
    x = _records(freq_hz, snr_db, [seed], n_bins, sample_rate_hz, randomize_phase)
    est, clamped, degenerate = _estimate_records(x, r, estimator_id, n_bins, sample_rate_hz)
    if degenerate[0]:
        raise DegenerateSpectrumError("trial spectrum has no curvature at its peak")
    return TrialOutcome(float(est[0]), bool(clamped[0]))


def _wrapped_error(est, truth, sample_rate_hz):
    return np.mod(est - truth + sample_rate_hz / 2, sample_rate_hz) - sample_rate_hz / 2


def _chunks(spec: ExperimentSpec, freq_hz, snr_db, cells):
    """Yield per-chunk ``{cell: (estimates_hz, clamped, degenerate)}`` in trial order."""
    for start in range(0, spec.trials, CHUNK):
        stop = min(start + CHUNK, spec.trials)
        seeds = [derive_seed(spec.base_seed, freq_hz, snr_db, t) for t in range(start, stop)]
        x = _records(freq_hz, snr_db, seeds, spec.n_bins, spec.sample_rate_hz, spec.randomize_phase)
        spectra = {}
        out = {}
        for cell in cells:
            _, _, r, est_id = cell
            if r not in spectra:
                spectra[r] = damped_dft(x, r)
            peak, delta, clamped, degenerate = estimate_batch(spectra[r], spec.n_bins, r, est_id)
            est = bins_to_hz(peak + delta, spec.n_bins, spec.sample_rate_hz)
            out[cell] = (est, clamped, degenerate)
        yield out


def trial_estimates(spec: ExperimentSpec, freq_hz, snr_db, damping, estimator_id):
    """Per-trial frequency estimates (Hz) for one cell, in trial-index order.

    Degenerate trials come back as ``nan``. Returns ``(estimates, clamped)``.
    """
    cell = (freq_hz, snr_db, _spectrum_damping(estimator_id, damping), estimator_id)
    parts = list(_chunks(spec, freq_hz, snr_db, [cell]))
    est = np.concatenate([p[cell][0] for p in parts])
    clamped = np.concatenate([p[cell][1] for p in parts])
    return est, clamped


def _run_point(spec: ExperimentSpec, freq_hz, snr_db):
    """All cells at one ``(freq, snr)`` operating point."""
    cells = [c for c in spec.cells() if c[0] == freq_hz and c[1] == snr_db]
    errors = {c: [] for c in cells}
    clamps = {c: 0 for c in cells}
    fails = {c: 0 for c in cells}
    for chunk in _chunks(spec, freq_hz, snr_db, cells):
        for cell, (est, clamped, degenerate) in chunk.items():
            ok = ~degenerate
            errors[cell].append(_wrapped_error(est[ok], freq_hz, spec.sample_rate_hz))
            clamps[cell] += int(clamped.sum())
            fails[cell] += int(degenerate.sum())
    return [
        _aggregate(cell, np.concatenate(errors[cell]), clamps[cell], fails[cell])
        for cell in cells
    ]


def _aggregate(cell, err, clamp_count, failures):
    freq_hz, snr_db, r, est_id = cell
    t = len(err)
    if t == 0:
        bias = rmse = math.nan
    else:
        # exactly rounded sums: independent of batching and summation order
        bias = math.fsum(err.tolist()) / t
        rmse = math.sqrt(math.fsum((err * err).tolist()) / t)
        rmse = max(rmse, abs(bias))  # guards a last-ulp inversion when all errors are equal
    return TrialStats(
        freq_hz=freq_hz,
        snr_db=snr_db,
        damping=r,
        estimator_id=est_id,
        mean_estimate_hz=freq_hz + bias,
        bias_hz=bias,
        rmse_hz=rmse,
        clamp_count=clamp_count,
        trials=t,
        failures=failures,
    )


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list:
    """Run every cell of ``spec``; returns TrialStats sorted in CSV order."""
    spec.check_offsets()
    points = sorted({(c[0], c[1]) for c in spec.cells()})
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_point, [spec] * len(points), *zip(*points)))
    else:
        parts = [_run_point(spec, f, s) for f, s in points]
    stats = [s for part in parts for s in part]
    return sorted(stats, key=TrialStats.sort_key)


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(stats: Sequence[TrialStats], destination):
    """Write one row per cell to a path or an open text stream."""
    rows = sorted(stats, key=TrialStats.sort_key)
    if isinstance(destination, (str, Path)):
        with open(destination, "w", newline="") as fh:
            _write_rows(rows, fh)
    else:
        _write_rows(rows, destination)


def _write_rows(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in rows:
        writer.writerow(
            [
                _fmt(s.freq_hz),
                _fmt(s.snr_db),
                _fmt(s.damping),
                s.estimator_id,
                _fmt(s.mean_estimate_hz),
                _fmt(s.bias_hz),
                _fmt(s.rmse_hz),
                _fmt(s.clamp_count),
                _fmt(s.trials),
            ]
        )


def to_csv_string(stats):
    buf = io.StringIO()
    emit_csv(stats, buf)
    return buf.getvalue()


def read_csv(source):
    """Parse CSV written by :func:`emit_csv` back into TrialStats."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return read_csv(fh)
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        out.append(
            TrialStats(
                freq_hz=float(row["freq_hz"]),
                snr_db=float(row["snr_db"]),
                damping=float(row["damping"]),
                estimator_id=row["estimator"],
                mean_estimate_hz=float(row["mean_estimate_hz"]),
                bias_hz=float(row["bias_hz"]),
                rmse_hz=float(row["rmse_hz"]),
                clamp_count=int(row["clamp_count"]),
                trials=int(row["trials"]),
            )
        )
    return out


# --- key=value experiment configs -------------------------------------------

_NO_NOISE_WORDS = {"none", "inf", "+inf", "off", "noiseless"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_snr(token):
    return NO_NOISE if token.lower() in _NO_NOISE_WORDS else float(token)


def _parse_bool(token):
    t = token.lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {token!r}")


def _split(value):
    return [t.strip() for t in value.split(",") if t.strip()]


_PARSERS = {
    "n_bins": int,
    "sample_rate_hz": float,
    "freq_list_hz": lambda v: tuple(float(t) for t in _split(v)),
    "damping_list": lambda v: tuple(float(t) for t in _split(v)),
    "snr_db_list": lambda v: tuple(_parse_snr(t) for t in _split(v)),
    "trials": int,
    "base_seed": int,
    "estimators": lambda v: tuple(_split(v)),
    "randomize_phase": _parse_bool,
}


def parse_config(text, base: ExperimentSpec | None = None) -> ExperimentSpec:
    """Build an ExperimentSpec from ``key = value`` lines.

    Keys are ExperimentSpec field names; lists are comma separated; ``#``
    starts a comment. Unknown keys and unparsable values raise ConfigError
    naming every offending key.
    """
    values, unknown, bad = {}, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            unknown.append(key)
            continue
        try:
            values[key] = _PARSERS[key](value)
        except ValueError:
            bad.append(key)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}", unknown)
    if bad:
        raise ConfigError(f"unparsable values for keys: {', '.join(bad)}", bad)
    try:
        return replace(base or ExperimentSpec(), **values)
    except InvalidSpecError as exc:
        raise ConfigError(str(exc), list(values)) from exc


def load_config(path, base: ExperimentSpec | None = None) -> ExperimentSpec:
    return parse_config(Path(path).read_text(), base)
