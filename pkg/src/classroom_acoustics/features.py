"""Clip-level acoustic features.

Two families are produced:

* A-weighted sound level per frame (``spl_series``), used for noisy/quiet
  classification, teacher/student differentiation and noise localization.
* 12-dimensional gender vectors (``gender_features``): autocorrelation
  pitch followed by the 11 cepstra of a 10th-order RASTA-PLP model, taken
  from voiced, non-silent frames only.

Levels are dB relative to a full-scale sine plus ``calibration_offset``;
with the default offset of 94 a full-scale 1 kHz sine reads 94 dBA.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio_io import AudioClip
from .dsp import (
    DEFAULT_FRAMES,
    FrameParams,
    autocorrelation,
    frame_signal,
    hamming_window,
    median_filter,
    power_spectrum,
)

SILENCE_FLOOR_DB = -120.0
A_WEIGHT_FLOOR_DB = -200.0
DEFAULT_CALIBRATION_DB = 94.0
FULL_SCALE_SINE_POWER = 0.5

VOICING_THRESHOLD = 0.45
FMIN = 60.0
FMAX = 400.0
PITCH_MEDIAN_WINDOW = 5

RASTA_NUMERATOR = np.array([0.2, 0.1, 0.0, -0.1, -0.2])
RASTA_DENOMINATOR = np.array([1.0, -0.94])
PLP_ORDER = 10
GENDER_DIM = PLP_ORDER + 2
_BAND_ENERGY_FLOOR = 1e-12


def a_weight_gain(f):
    """A-weighting gain in dB (IEC analytic form, 0 dB at 1 kHz).

    Accepts a scalar or an array. ``f = 0`` maps to ``A_WEIGHT_FLOOR_DB``.
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise ValueError("frequency must be non-negative")
    f2 = f * f
    ra = (12194.0 ** 2 * f2 * f2) / (
        (f2 + 20.6 ** 2)
        * np.sqrt((f2 + 107.7 ** 2) * (f2 + 737.9 ** 2))
        * (f2 + 12194.0 ** 2)
    )
    with np.errstate(divide="ignore"):
        gain = 20.0 * np.log10(ra) + 2.00
    gain = np.maximum(gain, A_WEIGHT_FLOOR_DB)
    return float(gain) if gain.ndim == 0 else gain


def a_weight_power(f):
    """Linear power gain 10^(dB/10) of the A-weighting curve."""
    return 10.0 ** (np.asarray(a_weight_gain(f)) / 10.0)


@dataclass(frozen=True, eq=False)
class SplSeries:
    levels: np.ndarray  # dBA, one per frame
    calibration_offset: float
    frame_len: int
    hop: int
    sample_rate: int

    def __len__(self) -> int:
        return self.levels.size


def _to_db(mean_square) -> np.ndarray:
    ms = np.maximum(np.asarray(mean_square, dtype=np.float64), 1e-300)
    return np.maximum(10.0 * np.log10(ms / FULL_SCALE_SINE_POWER), SILENCE_FLOOR_DB)


def _one_sided_factors(n: int) -> np.ndarray:
    """Multiplicities that turn a half spectrum back into a full-spectrum sum."""
    c = np.full(n // 2 + 1, 2.0)
    c[0] = 1.0
    if n % 2 == 0:
        c[-1] = 1.0
    return c


def spl_series(
    clip: AudioClip,
    calibration_offset: float = DEFAULT_CALIBRATION_DB,
    frames: FrameParams = DEFAULT_FRAMES,
) -> SplSeries:
    """Per-frame A-weighted sound level in dBA.

    Each Hamming-windowed frame's power spectrum is weighted bin by bin with
    the A-curve and summed. Dividing by ``n * sum(w**2)`` gives the weighted
    mean-square amplitude (Parseval with window-energy correction), which is
    referenced to a full-scale sine. Zero-power frames sit at
    ``SILENCE_FLOOR_DB + calibration_offset``.
    """
    frame_len, hop = frames.samples(clip.sample_rate)
    fs = frame_signal(clip, frame_len, hop)
    w = hamming_window(frame_len)
    spec = power_spectrum(fs.frames * w)
    freqs = np.arange(spec.shape[1]) * clip.sample_rate / frame_len
    weights = a_weight_power(freqs) * _one_sided_factors(frame_len)
    mean_square = spec @ weights / (frame_len * np.dot(w, w))
    levels = _to_db(mean_square) + calibration_offset
    levels.setflags(write=False)
    return SplSeries(levels, float(calibration_offset), frame_len, hop, clip.sample_rate)


def frame_levels(clip: AudioClip, frames: FrameParams = DEFAULT_FRAMES) -> np.ndarray:
    """Unweighted per-frame level, dB re full-scale sine (no calibration)."""
    frame_len, hop = frames.samples(clip.sample_rate)
    fs = frame_signal(clip, frame_len, hop)
    return _to_db(np.mean(fs.frames ** 2, axis=1))


def silence_mask(
    clip: AudioClip,
    frames: FrameParams = DEFAULT_FRAMES,
    threshold: float = 30.0,
) -> np.ndarray:
    """True for frames more than ``threshold`` dB below the clip's 95th percentile.

    Frames with zero power are always silent, so an all-silent clip is
    entirely masked.
    """
    levels = frame_levels(clip, frames)
    ref = np.percentile(levels, 95)
    return (levels < ref - threshold) | (levels <= SILENCE_FLOOR_DB)


def estimate_pitch(
    frame,
    sample_rate: int,
    fmin: float = FMIN,
    fmax: float = FMAX,
    threshold: float = VOICING_THRESHOLD,
) -> float | None:
    """Autocorrelation pitch of one frame in Hz, or ``None`` when unvoiced.

    The normalized autocorrelation r(k)/r(0) of the mean-removed frame is
    searched over lags ``ceil(rate/fmax) .. floor(rate/fmin)`` (clipped to
    the frame). The frame is voiced when the peak reaches ``threshold``.
    """
    x = np.asarray(frame, dtype=np.float64)
    x = x - x.mean()
    lo = int(np.ceil(sample_rate / fmax))
    hi = min(int(np.floor(sample_rate / fmin)), x.size - 1)
    if lo > hi:
        return None
    r = autocorrelation(x, hi)
    if r[0] <= 0.0:
        return None
    rho = r[lo:hi + 1] / r[0]
    best = int(np.argmax(rho))
    if rho[best] < threshold:
        return None
    return sample_rate / (lo + best)


@dataclass(frozen=True, eq=False)
class PitchTrack:
    pitch: np.ndarray  # Hz, NaN where unvoiced
    fmin: float = FMIN
    fmax: float = FMAX

    @property
    def voiced(self) -> np.ndarray:
        return ~np.isnan(self.pitch)

    def __len__(self) -> int:
        return self.pitch.size


def voiced_runs(mask) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` index ranges of consecutive True values."""
    mask = np.asarray(mask, dtype=bool)
    edges = np.diff(np.concatenate(([0], mask.view(np.int8), [0])))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def smooth_pitch(pitch, window: int = PITCH_MEDIAN_WINDOW) -> np.ndarray:
    """Median-filter each voiced run separately; NaN (unvoiced) stays put."""
    out = np.array(pitch, dtype=np.float64)
    for start, stop in voiced_runs(~np.isnan(out)):
        out[start:stop] = median_filter(out[start:stop], window)
    return out


def pitch_track(
    clip: AudioClip,
    frames: FrameParams = DEFAULT_FRAMES,
    fmin: float = FMIN,
    fmax: float = FMAX,
    threshold: float = VOICING_THRESHOLD,
    median_window: int = PITCH_MEDIAN_WINDOW,
) -> PitchTrack:
    frame_len, hop = frames.samples(clip.sample_rate)
    fs = frame_signal(clip, frame_len, hop)
    raw = [estimate_pitch(f, clip.sample_rate, fmin, fmax, threshold) for f in fs.frames]
    pitch = np.array([np.nan if p is None else p for p in raw])
    return PitchTrack(smooth_pitch(pitch, median_window), fmin, fmax)


def hz_to_bark(f):
    return 6.0 * np.arcsinh(np.asarray(f, dtype=np.float64) / 600.0)


def bark_to_hz(z):
    return 600.0 * np.sinh(np.asarray(z, dtype=np.float64) / 6.0)


def bark_filterbank(frame_len: int, sample_rate: int) -> tuple[np.ndarray, np.ndarray]:
    """Critical-band weights (bands x bins) and band centers in Bark.

    Bands are spaced evenly, about one Bark apart, from 0 up to Nyquist.
    Each has the log-trapezoidal critical-band shape: flat for |dz| <= 0.5,
    rising 10 dB per Bark below and falling 25 dB per Bark above.
    """
    top = float(hz_to_bark(sample_rate / 2.0))
    nbands = int(np.ceil(top)) + 1
    centers = np.linspace(0.0, top, nbands)
    bins = hz_to_bark(np.arange(frame_len // 2 + 1) * sample_rate / frame_len)
    dz = bins[None, :] - centers[:, None]
    weights = np.zeros_like(dz)
    low = (dz >= -1.3) & (dz < -0.5)
    flat = (dz >= -0.5) & (dz <= 0.5)
    high = (dz > 0.5) & (dz <= 2.5)
    weights[low] = 10.0 ** (dz[low] + 0.5)
    weights[flat] = 1.0
    weights[high] = 10.0 ** (-2.5 * (dz[high] - 0.5))
    return weights, centers


def levinson_durbin(r, order: int) -> tuple[np.ndarray, float]:
    """Solve the normal equations for A(z) = 1 + a1 z^-1 + ... + ap z^-p.

    Returns ``(a, err)`` with ``a[0] == 1`` and ``err`` the final prediction
    error power.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        k = -np.dot(a[:i], r[i:0:-1]) / err
        a[1:i + 1] = a[1:i + 1] + k * a[i - 1::-1][:i]
        err *= 1.0 - k * k
    return a, err


def lpc_to_cepstrum(a, err: float) -> np.ndarray:
    """Cepstrum c0..cp of the all-pole model err / |A|^2 (c0 = log err)."""
    p = len(a) - 1
    c = np.zeros(p + 1)
    c[0] = np.log(err)
    for n in range(1, p + 1):
        acc = sum(k * c[k] * a[n - k] for k in range(1, n))
        c[n] = -a[n] - acc / n
    return c


def plp_cepstra(band_energy, centers, order: int = PLP_ORDER) -> np.ndarray:
    """Loudness-weight, compress and model linear band energies (frames x bands)."""
    e = np.asarray(band_energy, dtype=np.float64) * a_weight_power(bark_to_hz(centers))
    # edge bands sit where the loudness curve is degenerate; copy neighbours
    e[:, 0] = e[:, 1]
    e[:, -1] = e[:, -2]
    e = np.cbrt(e)
    full = np.concatenate([e, e[:, -2:0:-1]], axis=1)
    r = np.fft.ifft(full, axis=1).real[:, : order + 1]
    out = np.empty((e.shape[0], order + 1))
    for i, row in enumerate(r):
        a, err = levinson_durbin(row, order)
        out[i] = lpc_to_cepstrum(a, err)
    return out


def rasta_plp(
    clip: AudioClip,
    frames: FrameParams = DEFAULT_FRAMES,
    order: int = PLP_ORDER,
) -> np.ndarray:
    """RASTA-PLP cepstra, one row of ``order + 1`` coefficients per frame.

    Log critical-band energies are band-pass filtered across frames with
    H(z) = (0.2 + 0.1 z^-1 - 0.1 z^-3 - 0.2 z^-4) / (1 - 0.94 z^-1), starting
    from zero filter state, before the PLP stages.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    frame_len, hop = frames.samples(clip.sample_rate)
    fs = frame_signal(clip, frame_len, hop)
    weights, centers = bark_filterbank(frame_len, clip.sample_rate)
    if order >= centers.size:
        raise ValueError(f"order {order} needs more than {centers.size} critical bands")
    spec = power_spectrum(fs.frames * hamming_window(frame_len))
    log_e = np.log(np.maximum(spec @ weights.T, _BAND_ENERGY_FLOOR))
    filtered = lfilter(RASTA_NUMERATOR, RASTA_DENOMINATOR, log_e, axis=0)
    return plp_cepstra(np.exp(filtered), centers, order)


def gender_features(
    clip: AudioClip,
    frames: FrameParams = DEFAULT_FRAMES,
    silence_threshold: float = 30.0,
    with_index: bool = False,
):
    """Rows ``[pitch, c0..c10]`` for frames that are voiced and not silent.

    With ``with_index=True`` returns ``(vectors, frame_indices)``.
    """
    track = pitch_track(clip, frames)
    keep = track.voiced & ~silence_mask(clip, frames, silence_threshold)
    idx = np.flatnonzero(keep)
    if idx.size:
        cep = rasta_plp(clip, frames)[idx]
        vectors = np.column_stack([track.pitch[idx], cep])
    else:
        vectors = np.empty((0, GENDER_DIM))
    return (vectors, idx) if with_index else vectors
