"""Signal kernel: framing, windows, spectra, autocorrelation, median smoothing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip


@dataclass(frozen=True)
class FrameParams:
    """Frame length in milliseconds and fractional overlap between frames."""

    frame_len_ms: float = 32.0
    overlap: float = 0.5

    def __post_init__(self):
        if self.frame_len_ms <= 0:
            raise ValueError("frame_len_ms must be positive")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must lie in [0, 1)")

    def samples(self, sample_rate: int) -> tuple[int, int]:
        """Return ``(frame_len, hop)`` in samples; 32 ms @ 16 kHz is 512/256."""
        frame_len = max(2, int(round(sample_rate * self.frame_len_ms / 1000.0)))
        hop = max(1, int(round(frame_len * (1.0 - self.overlap))))
        return frame_len, hop


DEFAULT_FRAMES = FrameParams()


@dataclass(frozen=True, eq=False)
class FrameSequence:
    frames: np.ndarray  # (n_frames, frame_len), read-only view
    frame_len: int
    hop: int
    sample_rate: int

    def __len__(self) -> int:
        return self.frames.shape[0]

    def starts(self) -> np.ndarray:
        return np.arange(len(self)) * self.hop


def frame_signal(clip: AudioClip, frame_len: int, hop: int) -> FrameSequence:
    """Cut ``clip`` into overlapping frames; the trailing remainder is dropped."""
    n = len(clip)
    if not 0 < hop <= frame_len:
        raise ValueError("need 0 < hop <= frame_len")
    if frame_len > n:
        raise ValueError(f"frame_len {frame_len} exceeds clip length {n}")
    frames = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)[::hop]
    return FrameSequence(frames, frame_len, hop, clip.sample_rate)


def hamming_window(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("window length must be at least 2")
    i = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * i / (n - 1))


def power_spectrum(frame) -> np.ndarray:
    """|DFT|^2 for bins 0..n//2. Accepts a single frame or a 2-D stack of frames."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] < 2:
        raise ValueError("frame length must be at least 2")
    spec = np.fft.rfft(frame, axis=-1)
    return spec.real ** 2 + spec.imag ** 2


def autocorrelation(frame, max_lag: int) -> np.ndarray:
    """Raw (biased) autocorrelation r(k) = sum_t x(t) x(t+k) for k = 0..max_lag."""
    x = np.asarray(frame, dtype=np.float64)
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag {max_lag} must be below frame length {n}")
    r = np.correlate(x, x, mode="full")[n - 1:n + max_lag]
    # summation order can push |r(k)| past r(0) by an ulp on periodic input
    return np.clip(r, -r[0], r[0])


def median_filter(series, window: int = 5) -> np.ndarray:
    """Running median; near the edges the window shrinks symmetrically."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = np.median(x[i - h:i + h + 1])
    return out
