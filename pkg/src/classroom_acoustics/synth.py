"""Deterministic synthetic audio: tones, voiced pulse trains, noise, scenarios.

Every generator is a pure function of its arguments; a seed fully
determines every byte written. Labels in a corpus truth file come from the
construction parameters and are never measured from the audio.
"""
from __future__ import annotations

import wave
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import jsonfmt
from .audio_io import QUADRANTS, AudioClip, Position
from .features import DEFAULT_CALIBRATION_DB, FULL_SCALE_SINE_POWER, a_weight_power

VOICED_FMIN = 60.0
VOICED_FMAX = 400.0
HARMONIC_CEILING = 4000.0
MALE_F0 = (100.0, 140.0)
FEMALE_F0 = (190.0, 250.0)
SPEECH_LEVELS = ("low", "medium", "high")

ROOM_WIDTH = 12.0  # m, left to right
ROOM_DEPTH = 10.0  # m, front to back
MIC_POSITIONS = {
    Position.FRONT_LEFT: (1.0, 1.0),
    Position.FRONT_RIGHT: (ROOM_WIDTH - 1.0, 1.0),
    Position.BACK_LEFT: (1.0, ROOM_DEPTH - 1.0),
    Position.BACK_RIGHT: (ROOM_WIDTH - 1.0, ROOM_DEPTH - 1.0),
}


def _time(dur: float, rate: int) -> np.ndarray:
    n = int(round(dur * rate))
    if n <= 0:
        raise ValueError("duration must cover at least one sample")
    return np.arange(n) / rate


def gen_tone(freq: float, dur: float, amp: float, rate: int, id: str = "tone") -> AudioClip:
    if not 0.0 < freq < rate / 2.0:
        raise ValueError(f"frequency {freq} Hz must lie strictly between 0 and Nyquist")
    if not 0.0 <= amp <= 1.0:
        raise ValueError("amp must lie in [0, 1]")
    return AudioClip(amp * np.sin(2.0 * np.pi * freq * _time(dur, rate)), rate, id)


def harmonic_series(f0: float, t: np.ndarray, rate: int, phases=None) -> np.ndarray:
    """Sum of harmonics k*f0 below 4 kHz (and Nyquist) with 1/k amplitudes."""
    top = min(HARMONIC_CEILING, rate / 2.0)
    ks = np.arange(1, int(np.ceil(top / f0)) + 1)
    ks = ks[ks * f0 < top]
    if phases is None:
        phases = np.zeros(ks.size)
    out = np.zeros_like(t)
    for k, ph in zip(ks, phases[: ks.size]):
        out += np.sin(2.0 * np.pi * k * f0 * t + ph) / k
    return out


def gen_voiced(f0: float, dur: float, amp: float, rate: int, id: str = "voiced", seed: int | None = None) -> AudioClip:
    """Harmonic pulse train at ``f0`` peak-normalized to ``amp``.

    With ``seed`` the harmonic phases are randomized, which lowers the crest
    factor without changing the spectrum.
    """
    if not VOICED_FMIN <= f0 <= VOICED_FMAX:
        raise ValueError(f"f0 {f0} Hz outside the speech range {VOICED_FMIN}-{VOICED_FMAX}")
    if not 0.0 <= amp <= 1.0:
        raise ValueError("amp must lie in [0, 1]")
    t = _time(dur, rate)
    phases = None if seed is None else np.random.default_rng(seed).uniform(0, 2 * np.pi, 64)
    x = harmonic_series(f0, t, rate, phases)
    peak = np.max(np.abs(x))
    return AudioClip(amp * x / peak if peak > 0 else x, rate, id)


def gen_noise(amp: float, dur: float, rate: int, seed: int, id: str = "noise") -> AudioClip:
    """Seeded uniform white noise on [-amp, amp]."""
    if not 0.0 <= amp <= 1.0:
        raise ValueError("amp must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    return AudioClip(amp * rng.uniform(-1.0, 1.0, _time(dur, rate).size), rate, id)


def write_wav(clip: AudioClip, path) -> Path:
    """Write 16-bit mono PCM; samples are rounded to the nearest 1/32768 step."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(pcm.tobytes())
    return path


def a_weighted_level(x, rate: int) -> float:
    """Whole-signal A-weighted level in dB re a full-scale sine (no calibration)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    spec = np.fft.rfft(x)
    power = spec.real ** 2 + spec.imag ** 2
    mult = np.full(power.size, 2.0)
    mult[0] = 1.0
    if n % 2 == 0:
        mult[-1] = 1.0
    ms = np.sum(mult * power * a_weight_power(np.fft.rfftfreq(n, 1.0 / rate))) / n ** 2
    return 10.0 * np.log10(max(ms, 1e-300) / FULL_SCALE_SINE_POWER)


def scale_to_level(x, rate: int, level_db: float) -> np.ndarray:
    """Rescale ``x`` so its A-weighted level equals ``level_db`` (dB re full scale)."""
    return np.asarray(x) * 10.0 ** ((level_db - a_weighted_level(x, rate)) / 20.0)


def _bursts(n: int, rate: int, duty: float, rng: np.random.Generator) -> np.ndarray:
    """0/1 gate of random on/off segments (0.2-0.8 s) with the given on-probability."""
    gate = np.zeros(n)
    pos = 0
    while pos < n:
        seg = int(rng.uniform(0.2, 0.8) * rate)
        if rng.random() < duty:
            gate[pos:pos + seg] = 1.0
        pos += seg
    # 5 ms ramps avoid clicks at segment edges
    ramp = max(1, int(0.005 * rate))
    return np.convolve(gate, np.ones(ramp) / ramp, mode="same")


def babble(dur: float, rate: int, rng: np.random.Generator, voices: int = 4, duty: float = 0.8) -> np.ndarray:
    """Several gated student voices over a little broadband rustle (unscaled)."""
    t = _time(dur, rate)
    mix = np.zeros_like(t)
    for _ in range(voices):
        f0 = rng.uniform(110.0, 280.0)
        v = harmonic_series(f0, t, rate, rng.uniform(0, 2 * np.pi, 64))
        mix += v / np.sqrt(np.mean(v ** 2)) * _bursts(t.size, rate, duty, rng)
    mix += rng.uniform(-1.0, 1.0, t.size) * 0.3
    return mix


def teacher_speech(f0: float, dur: float, rate: int, rng: np.random.Generator, depth: float = 0.2) -> np.ndarray:
    """Voiced pulse train with a mild 3-5 Hz syllabic envelope (unscaled)."""
    t = _time(dur, rate)
    env = 1.0 + depth * np.sin(2.0 * np.pi * rng.uniform(3.0, 5.0) * t + rng.uniform(0, 2 * np.pi))
    return harmonic_series(f0, t, rate) * env


# ---------------------------------------------------------------- scenarios

@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic lecture corpus parameters. Levels are dBA at ``calibration_offset``."""

    seed: int = 0
    n_lectures: int = 30
    clips_per_lecture: int = 20
    clip_seconds: float = 2.0
    sample_rate: int = 16000
    calibration_offset: float = DEFAULT_CALIBRATION_DB
    noisy_lecture_fraction: float = 0.5
    noisy_share_in_noisy: tuple[float, float] = (0.6, 0.7)
    noisy_share_in_quiet: tuple[float, float] = (0.15, 0.35)
    teacher_levels: dict = field(default_factory=lambda: {
        "low": (49.0, 53.0), "medium": (58.0, 62.0), "high": (67.0, 70.0)})
    teacher_jitter_db: float = 0.25
    floor_level_dba: float = 40.0
    babble_level_dba: tuple[float, float] = (66.0, 80.0)
    babble_duty: tuple[float, float] = (0.6, 1.0)
    babble_voices: tuple[int, int] = (3, 5)
    # probability that a lecture's speech level is tied to its noise label
    # (noisy -> low, quiet -> high) instead of drawn uniformly
    level_noise_coupling: float = 0.0
    gender_plan: tuple[str, ...] | None = None
    level_plan: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n_lectures < 0 or self.clips_per_lecture < 1:
            raise ValueError("need n_lectures >= 0 and clips_per_lecture >= 1")
        for plan, allowed in ((self.gender_plan, ("male", "female")), (self.level_plan, SPEECH_LEVELS)):
            if plan is not None and (len(plan) != self.n_lectures or set(plan) - set(allowed)):
                raise ValueError(f"plan must list one of {allowed} per lecture")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["teacher_levels"] = {k: list(v) for k, v in self.teacher_levels.items()}
        return d


@dataclass(frozen=True)
class LecturePlan:
    lecture_id: str
    noise_label: str
    gender: str
    speech_level: str
    instructor_level_dba: float
    f0: float
    clip_labels: tuple[str, ...]


def plan_corpus(config: ScenarioConfig) -> list[LecturePlan]:
    """Draw every lecture's ground truth from the seed."""
    rng = np.random.default_rng([config.seed, 0])
    n = config.n_lectures
    n_noisy = int(round(n * config.noisy_lecture_fraction))
    noisy = np.zeros(n, dtype=bool)
    noisy[rng.permutation(n)[:n_noisy]] = True
    plans = []
    for i in range(n):
        label = "noisy" if noisy[i] else "quiet"
        gender = config.gender_plan[i] if config.gender_plan else str(rng.choice(["male", "female"]))
        if config.level_plan:
            level = config.level_plan[i]
        elif rng.random() < config.level_noise_coupling:
            level = "low" if noisy[i] else "high"
        else:
            level = str(rng.choice(SPEECH_LEVELS))
        lo, hi = config.teacher_levels[level]
        f_lo, f_hi = MALE_F0 if gender == "male" else FEMALE_F0
        share = config.noisy_share_in_noisy if noisy[i] else config.noisy_share_in_quiet
        m = config.clips_per_lecture
        k = int(round(m * rng.uniform(*share)))
        if 2 * k == m:  # keep the planted lecture label a strict majority
            k += 1 if noisy[i] else -1
        k = min(max(k, 0), m)
        clip_noisy = np.zeros(m, dtype=bool)
        clip_noisy[rng.permutation(m)[:k]] = True
        plans.append(LecturePlan(
            lecture_id=f"L{i:03d}",
            noise_label=label,
            gender=gender,
            speech_level=level,
            instructor_level_dba=float(rng.uniform(lo, hi)),
            f0=float(rng.uniform(f_lo, f_hi)),
            clip_labels=tuple("noisy" if b else "quiet" for b in clip_noisy),
        ))
    return plans


def lecture_clips(config: ScenarioConfig, plan: LecturePlan, index: int) -> list[AudioClip]:
    """Synthesize one lecture's clips in sequence order."""
    rate, dur, cal = config.sample_rate, config.clip_seconds, config.calibration_offset
    clips = []
    for j, label in enumerate(plan.clip_labels):
        rng = np.random.default_rng([config.seed, 1, index, j])
        f0 = float(np.clip(plan.f0 * rng.uniform(0.97, 1.03), VOICED_FMIN, VOICED_FMAX))
        level = plan.instructor_level_dba + rng.normal(0.0, config.teacher_jitter_db)
        x = scale_to_level(teacher_speech(f0, dur, rate, rng), rate, level - cal)
        floor = rng.uniform(-1.0, 1.0, x.size)
        x += scale_to_level(floor, rate, config.floor_level_dba - cal)
        if label == "noisy":
            b = babble(dur, rate, rng, int(rng.integers(config.babble_voices[0], config.babble_voices[1] + 1)),
                       rng.uniform(*config.babble_duty))
            x += scale_to_level(b, rate, rng.uniform(*config.babble_level_dba) - cal)
        peak = np.max(np.abs(x))
        if peak > 0.99:  # rare coincident babble peaks; limit instead of hard clipping
            x *= 0.99 / peak
        clips.append(AudioClip(x, rate, f"{plan.lecture_id}_c{j:02d}"))
    return clips


def truth_record(plan: LecturePlan) -> dict:
    return {
        "noise_label": plan.noise_label,
        "gender": plan.gender,
        "speech_level": plan.speech_level,
        "instructor_level_dba": plan.instructor_level_dba,
        "clip_labels": list(plan.clip_labels),
    }


@dataclass(frozen=True)
class Corpus:
    root: Path
    manifests: tuple[Path, ...]
    truth: dict


def gen_lecture_corpus(config: ScenarioConfig, out_dir) -> Corpus:
    """Write WAVs, one manifest per lecture and ``truth.json`` under ``out_dir``.

    Layout: ``<out>/<lecture_id>/manifest.json`` next to its
    ``<lecture_id>_cNN.wav`` clips, plus ``<out>/truth.json`` and
    ``<out>/scenario.json``.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    truth, manifests = {}, []
    for i, plan in enumerate(plan_corpus(config)):
        folder = root / plan.lecture_id
        entries = []
        for j, clip in enumerate(lecture_clips(config, plan, i)):
            write_wav(clip, folder / f"{clip.id}.wav")
            entries.append({"path": f"{clip.id}.wav", "position": "unspecified", "sequence_index": j})
        manifest = {"lecture_id": plan.lecture_id, "instructor_label": plan.gender, "clips": entries}
        path = folder / "manifest.json"
        path.write_text(jsonfmt.dumps(manifest))
        manifests.append(path)
        truth[plan.lecture_id] = truth_record(plan)
    (root / "truth.json").write_text(jsonfmt.dumps(truth))
    (root / "scenario.json").write_text(jsonfmt.dumps(config.to_dict()))
    return Corpus(root, tuple(manifests), truth)


def gen_quadrant_scenario(
    source_quadrant: Position,
    source_amp: float = 0.3,
    rate: int = 16000,
    seed: int = 0,
    dur: float = 2.0,
) -> dict[Position, AudioClip]:
    """One talking-student source heard by four corner microphones.

    The source sits 0.5-2 m from its quadrant's microphone (toward the room
    centre) in a 12 m x 10 m room. Each microphone receives the source with
    1/d amplitude attenuation, normalized so the nearest one peaks at
    ``source_amp``, plus its own faint sensor noise.
    """
    source_quadrant = Position(source_quadrant)
    if source_quadrant not in QUADRANTS:
        raise ValueError(f"{source_quadrant} is not a quadrant")
    rng = np.random.default_rng([seed, 2])
    mx, my = MIC_POSITIONS[source_quadrant]
    sx = mx + np.sign(ROOM_WIDTH / 2 - mx) * rng.uniform(0.5, 2.0)
    sy = my + np.sign(ROOM_DEPTH / 2 - my) * rng.uniform(0.5, 2.0)
    src = babble(dur, rate, rng, voices=2, duty=0.8)
    src = src / np.max(np.abs(src))
    dist = {q: float(np.hypot(sx - x, sy - y)) for q, (x, y) in MIC_POSITIONS.items()}
    nearest = min(dist.values())
    out = {}
    for q in QUADRANTS:
        sensor = rng.uniform(-1.0, 1.0, src.size) * 1e-4
        x = source_amp * (nearest / dist[q]) * src + sensor
        out[q] = AudioClip(np.clip(x, -1.0, 1.0), rate, q.value)
    return out


def write_quadrant_scenario(clips: dict[Position, AudioClip], out_dir, lecture_id: str = "quadrant") -> Path:
    """Write the four clips and a manifest carrying their positions."""
    root = Path(out_dir)
    entries = []
    for i, q in enumerate(QUADRANTS):
        write_wav(clips[q], root / f"{q.value}.wav")
        entries.append({"path": f"{q.value}.wav", "position": q.value, "sequence_index": i})
    path = root / "manifest.json"
    path.write_text(jsonfmt.dumps({"lecture_id": lecture_id, "instructor_label": None, "clips": entries}))
    return path
