"""Acoustic features from WAV audio: logmel spectrograms, amplitude, pitch.

All three features share one snip-edges framing (no padding), so their frame
counts agree for any waveform: frames = 1 + (samples - window) // hop.  The
mel scale is the HTK formula mel(f) = 2595 log10(1 + f/700) with unit-peak
triangular filters; pitch is a YIN tracker over a 40 ms window centered on
each frame.  Parameter choices for amplitude and pitch are conventions of
this toolkit, documented here and in the README.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import FeatureMatrix

WINDOW_KINDS = ("hann", "rect")


@dataclass(frozen=True)
class LogmelConfig:
    sample_rate_hz: int
    window_ms: float = 25.0
    hop_ms: float = 10.0
    n_mels: int = 40
    low_hz: float = 20.0
    high_hz: float | None = None
    log_floor: float = 1e-10
    window: str = "hann"
    pitch_low_hz: float = 50.0
    pitch_high_hz: float = 400.0
    pitch_window_ms: float = 40.0
    pitch_threshold: float = 0.15

    def __post_init__(self):
        if self.sample_rate_hz < 1:
            raise ValueError("sample rate must be positive")
        if self.window_ms <= 0 or self.hop_ms <= 0:
            raise ValueError("window and hop must be positive")
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if self.log_floor <= 0:
            raise ValueError("log floor must be positive")
        if self.window not in WINDOW_KINDS:
            raise ValueError(f"unknown window {self.window!r}, expected one of {WINDOW_KINDS}")
        if not 0 < self.low_hz < self.effective_high_hz <= self.nyquist_hz:
            raise ValueError(
                f"mel band [{self.low_hz}, {self.effective_high_hz}] must satisfy "
                f"0 < low < high <= Nyquist ({self.nyquist_hz})"
            )
        if not 0 < self.pitch_low_hz < self.pitch_high_hz < self.nyquist_hz:
            raise ValueError("pitch search band must lie inside (0, Nyquist)")

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    @property
    def effective_high_hz(self) -> float:
        return self.nyquist_hz if self.high_hz is None else self.high_hz

    @property
    def window_samples(self) -> int:
        return int(round(self.sample_rate_hz * self.window_ms / 1000.0))

    @property
    def hop_samples(self) -> int:
        return int(round(self.sample_rate_hz * self.hop_ms / 1000.0))

    @property
    def fft_size(self) -> int:
        return 1 << max(0, (self.window_samples - 1)).bit_length()


@dataclass(frozen=True)
class CovariateSeries:
    """One non-negative value per analysis frame (RMS amplitude or pitch Hz)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("covariate series must be 1-D")
        if not np.isfinite(arr).all():
            raise ValueError("covariate series contains non-finite values")
        if (arr < 0).any():
            raise ValueError("covariate series must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a 16-bit PCM mono WAV as float64 samples in [-1, 1]."""
    try:
        handle = wave.open(str(path), "rb")
    except (wave.Error, EOFError) as exc:
        raise ValueError(f"{path}: unreadable WAV file ({exc})") from None
    with handle:
        if handle.getcomptype() != "NONE":
            raise ValueError(f"{path}: unsupported encoding {handle.getcomptype()!r}, need PCM")
        if handle.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono audio, got {handle.getnchannels()} channels")
        if handle.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit samples, got {8 * handle.getsampwidth()}-bit")
        n = handle.getnframes()
        raw = handle.readframes(n)
        if len(raw) != 2 * n:
            raise ValueError(f"{path}: truncated file, {len(raw)} bytes for {n} declared frames")
        rate = handle.getframerate()
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def _frame(waveform: np.ndarray, cfg: LogmelConfig) -> np.ndarray:
    win, hop = cfg.window_samples, cfg.hop_samples
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("waveform must be 1-D")
    if x.size < win:
        raise ValueError(f"waveform of {x.size} samples is shorter than one {win}-sample window")
    return np.lib.stride_tricks.sliding_window_view(x, win)[::hop]


def _window_array(cfg: LogmelConfig) -> np.ndarray:
    if cfg.window == "hann":
        return np.hanning(cfg.window_samples)
    return np.ones(cfg.window_samples)


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_center_frequencies(cfg: LogmelConfig) -> np.ndarray:
    """Center frequency (Hz) of each triangular filter."""
    points = np.linspace(hz_to_mel(cfg.low_hz), hz_to_mel(cfg.effective_high_hz), cfg.n_mels + 2)
    return mel_to_hz(points)[1:-1]


def mel_filterbank(cfg: LogmelConfig) -> np.ndarray:
    """n_mels x (fft_size/2 + 1) unit-peak triangular filters on rfft bins."""
    points = np.linspace(hz_to_mel(cfg.low_hz), hz_to_mel(cfg.effective_high_hz), cfg.n_mels + 2)
    edges = mel_to_hz(points)
    bin_freqs = np.arange(cfg.fft_size // 2 + 1) * cfg.sample_rate_hz / cfg.fft_size
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_freqs[None, :] - lower) / (center - lower)
    falling = (upper - bin_freqs[None, :]) / (upper - center)
    return np.clip(np.minimum(rising, falling), 0.0, None)


def logmel(waveform, cfg: LogmelConfig) -> FeatureMatrix:
    """Log mel-filterbank energies, one row per frame."""
    frames = _frame(waveform, cfg) * _window_array(cfg)
    power = np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1)) ** 2
    energies = power @ mel_filterbank(cfg).T
    return FeatureMatrix(np.log(np.maximum(energies, cfg.log_floor)), cfg.hop_ms)


def frame_amplitude(waveform, cfg: LogmelConfig) -> CovariateSeries:
    """Per-frame RMS of the windowed samples."""
    frames = _frame(waveform, cfg) * _window_array(cfg)
    return CovariateSeries(np.sqrt(np.mean(frames**2, axis=1)))


def _yin_pitch(segment: np.ndarray, rate: int, cfg: LogmelConfig) -> float:
    lag_min = max(2, int(math.floor(rate / cfg.pitch_high_hz)))
    lag_max = int(math.ceil(rate / cfg.pitch_low_hz))
    length = segment.size
    integration = length - lag_max
    if integration < max(lag_min, 16):
        return 0.0  # window too truncated to evaluate the band

    # difference d(tau) = e(0) + e(tau) - 2 r(tau) over a fixed integration window
    head = segment[:integration]
    corr = np.correlate(segment, head, mode="valid")  # corr[tau] = sum seg[tau+j] head[j]
    sq = np.concatenate([[0.0], np.cumsum(segment**2)])
    energy = sq[integration : integration + lag_max + 1] - sq[: lag_max + 1]
    diff = np.maximum(energy[0] + energy - 2.0 * corr[: lag_max + 1], 0.0)

    # cumulative-mean-normalized difference, d'(0) = 1
    cmndf = np.ones(lag_max + 1)
    running = np.cumsum(diff[1:])
    nonzero = running > 0
    lags = np.arange(1, lag_max + 1, dtype=np.float64)
    cmndf[1:][nonzero] = diff[1:][nonzero] * lags[nonzero] / running[nonzero]

    below = np.nonzero(cmndf[lag_min : lag_max + 1] < cfg.pitch_threshold)[0]
    if below.size == 0:
        return 0.0  # unvoiced
    lag = lag_min + int(below[0])
    while lag + 1 <= lag_max and cmndf[lag + 1] < cmndf[lag]:
        lag += 1

    refined = float(lag)
    if 1 <= lag < lag_max:
        left, mid, right = cmndf[lag - 1], cmndf[lag], cmndf[lag + 1]
        denom = left - 2.0 * mid + right
        if abs(denom) > 1e-12:
            delta = 0.5 * (left - right) / denom
            refined += float(np.clip(delta, -1.0, 1.0))
    return rate / refined


def frame_pitch(waveform, cfg: LogmelConfig) -> CovariateSeries:
    """YIN pitch per frame (Hz); 0 marks unvoiced frames.

    Each frame's analysis segment is pitch_window_ms wide, centered on the
    frame's window center; segments at the edges are truncated.
    """
    x = np.asarray(waveform, dtype=np.float64)
    n_frames = _frame(x, cfg).shape[0]  # validates length, fixes the frame count
    half = int(round(cfg.sample_rate_hz * cfg.pitch_window_ms / 1000.0)) // 2
    values = np.zeros(n_frames)
    for i in range(n_frames):
        center = i * cfg.hop_samples + cfg.window_samples // 2
        segment = x[max(0, center - half) : min(x.size, center + half)]
        values[i] = _yin_pitch(segment, cfg.sample_rate_hz, cfg)
    return CovariateSeries(values)
