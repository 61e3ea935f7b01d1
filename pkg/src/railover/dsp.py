"""Deterministic DSP for accelerometer channels.

Windowing, integration to vibration velocity, scalar features
(peak-to-peak, RMS), the 10-band log-spaced spectrum and assembly of
per-window feature frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import detrend, firwin

DEFAULT_SAMPLE_RATE_HZ = 5000.0
WINDOW_MS = 100.0
LOW_PASS_CUTOFF_HZ = 1000.0
N_BANDS = 10
N_FEATURES = 4 + N_BANDS

FEATURE_NAMES = ["vel_pp", "vel_rms", "acc_pp", "acc_rms"] + [
    f"oct{k}" for k in range(N_BANDS)
]


def _band_edges() -> np.ndarray:
    # 10 constant-ratio bands spanning 100..1200 Hz, ratio 12^(1/10)
    return 100.0 * 12.0 ** (np.arange(N_BANDS + 1) / N_BANDS)


@dataclass(frozen=True)
class BandPlan:
    """Edges of the 10 constant-ratio frequency bands, in Hz."""

    edges_hz: np.ndarray = field(default_factory=_band_edges)

    def __post_init__(self):
        e = np.asarray(self.edges_hz, float)
        if e.shape != (N_BANDS + 1,) or np.any(np.diff(e) <= 0):
            raise ValueError("band plan needs 11 strictly increasing edges")


DEFAULT_BAND_PLAN = BandPlan()


@dataclass
class Waveform:
    """One sensor channel's uniformly sampled acceleration trace (m/s^2)."""

    channel_id: str
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    start_time_s: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, float)
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")


@dataclass
class FeatureFrame:
    """The 14 per-window quantities plus train speed for one 100 ms frame."""

    vel_pp: float
    vel_rms: float
    acc_pp: float
    acc_rms: float
    octave: np.ndarray  # 10 band values, m/s^2
    speed_mps: float
    frame_index: int

    def as_vector(self) -> np.ndarray:
        """The 14 quantities in canonical order (octave last)."""
        return np.concatenate(
            [[self.vel_pp, self.vel_rms, self.acc_pp, self.acc_rms], self.octave]
        )


def frame_windows(w: Waveform, window_ms: float = WINDOW_MS) -> np.ndarray:
    """Split a waveform into non-overlapping windows (rows).

    The trailing partial window is discarded; 1 s at 5 kHz yields ten
    500-sample rows (10 Hz frame rate).
    """
    if w.samples.size == 0:
        raise ValueError("empty input")
    win = int(round(window_ms * w.sample_rate_hz / 1000.0))
    if win < 2:
        raise ValueError("window shorter than 2 samples")
    n = w.samples.size // win
    return w.samples[: n * win].reshape(n, win)


def peak_to_peak(x: np.ndarray) -> float:
    x = np.asarray(x, float)
    if x.size == 0:
        raise ValueError("empty input")
    return float(x.max() - x.min())


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, float)
    if x.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean(x * x)))


def integrate_to_velocity(x: np.ndarray, fs: float) -> np.ndarray:
    """Vibration velocity from one window of acceleration samples.

    Mean removal, cumulative trapezoidal integration and a linear detrend
    suppress drift; the output has the same length as the input.
    """
    if fs <= 0:
        raise ValueError("sample rate must be positive")
    x = np.asarray(x, float)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    v = cumulative_trapezoid(x - x.mean(), dx=1.0 / fs, initial=0.0)
    return detrend(v, type="linear")


def octave_spectrum(
    x: np.ndarray, fs: float, plan: BandPlan = DEFAULT_BAND_PLAN
) -> np.ndarray:
    """RMS-equivalent amplitude per frequency band for one window.

    The window is mean-removed and Hann-weighted before the DFT; band
    values are normalized so a pure tone of amplitude A inside one band
    reads about A/sqrt(2) there, and the root-sum-square over bands
    approximates the in-band signal RMS.
    """
    x = np.asarray(x, float)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    edges = plan.edges_hz
    if fs <= 2.0 * edges[-1]:
        raise ValueError("band above Nyquist")
    n = x.size
    w = np.hanning(n)
    spec = np.fft.rfft((x - x.mean()) * w)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    power = np.abs(spec) ** 2
    norm = n * np.sum(w * w)
    out = np.empty(N_BANDS)
    for k in range(N_BANDS):
        m = (freqs >= edges[k]) & (freqs < edges[k + 1])
        out[k] = np.sqrt(2.0 * power[m].sum() / norm)
    return out


def low_pass(
    x: np.ndarray, fs: float, cutoff_hz: float = LOW_PASS_CUTOFF_HZ
) -> np.ndarray:
    """Zero-phase FIR low-pass (windowed sinc).

    Tap count is chosen so the passband below 0.8*cutoff stays within
    1 dB and attenuation at 2*cutoff exceeds 20 dB. The input is
    reflect-padded so the output has the same length with no edge droop.
    """
    if not 0 < cutoff_hz < fs / 2:
        raise ValueError("cutoff must lie in (0, fs/2)")
    x = np.asarray(x, float)
    # Hamming transition half-width ~1.65*fs/numtaps; keep it under 0.2*cutoff
    numtaps = 2 * int(np.ceil(4.125 * fs / cutoff_hz)) + 1
    taps = firwin(numtaps, cutoff_hz, fs=fs)
    half = numtaps // 2
    if x.size <= half:
        xp = np.pad(x, half, mode="edge")
    else:
        xp = np.pad(x, half, mode="reflect")
    return np.convolve(xp, taps, mode="valid")


def featurize(w: Waveform, speed_mps: float) -> list[FeatureFrame]:
    """One FeatureFrame per 100 ms window; speed is copied into each."""
    if speed_mps < 0:
        raise ValueError("speed must be non-negative")
    frames = []
    for i, win in enumerate(frame_windows(w)):
        vel = integrate_to_velocity(win, w.sample_rate_hz)
        frames.append(
            FeatureFrame(
                vel_pp=peak_to_peak(vel),
                vel_rms=rms(vel),
                acc_pp=peak_to_peak(win),
                acc_rms=rms(win),
                octave=octave_spectrum(win, w.sample_rate_hz),
                speed_mps=float(speed_mps),
                frame_index=i,
            )
        )
    return frames


def frames_to_matrix(frames: list[FeatureFrame]) -> np.ndarray:
    """Stack frames into a (14, T) matrix in canonical feature order."""
    if not frames:
        raise ValueError("no frames")
    return np.stack([f.as_vector() for f in frames], axis=1)
