"""Lecture-level analysis.

Per clip: A-weighted level series, its normal fit, a k-NN noisy/quiet
verdict and (when voiced frames exist) a GMM gender decision. Per lecture:
majority noise verdict, modal instructor level, teacher/student roles,
instructor gender and speech-level category. Across lectures: chi-square
independence and difference-of-proportions tables.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .audio_io import QUADRANTS, AudioClip, LectureManifest, Position, load_wav
from .dsp import DEFAULT_FRAMES, FrameParams
from .features import DEFAULT_CALIBRATION_DB, gender_features, spl_series
from .models import Gender, GmmModel, KnnModel, NoiseLabel, classify_gender, knn_classify
from .stats import (
    ChiSquareResult,
    ContingencyTable,
    NormalFit,
    chi_square_independence,
    collapse_columns,
    diff_proportions,
    drop_empty,
    histogram,
    normal_fit,
)


class Role(str, enum.Enum):
    TEACHER = "teacher"
    STUDENT = "student"
    UNKNOWN = "unknown"


class SpeechLevel(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    frames: FrameParams = DEFAULT_FRAMES
    calibration_offset: float = DEFAULT_CALIBRATION_DB
    silence_threshold_db: float = 30.0
    speaker_delta_db: float = 3.0
    level_bin_db: float = 2.0
    level_low_db: float = 55.0
    level_high_db: float = 65.0

    def __post_init__(self):
        if self.level_low_db > self.level_high_db:
            raise ValueError("level_low_db must not exceed level_high_db")
        if self.speaker_delta_db < 0 or self.level_bin_db <= 0:
            raise ValueError("speaker delta must be >= 0 and bin width > 0")


@dataclass(frozen=True)
class ClipVerdict:
    clip_id: str
    sequence_index: int
    position: Position
    noise_label: NoiseLabel
    spl_fit: NormalFit
    role: Role
    gender: Gender
    voiced_frames: int

    @property
    def mean_level(self) -> float:
        return self.spl_fit.mean


@dataclass(frozen=True)
class LectureRecord:
    lecture_id: str
    noise_label: NoiseLabel
    instructor_level: float
    speech_level: SpeechLevel
    instructor_gender: Gender
    clips: tuple[ClipVerdict, ...] = field(default=())


def classify_clip_noise(
    model: KnnModel, clip: AudioClip, config: PipelineConfig = PipelineConfig()
) -> tuple[NoiseLabel, NormalFit]:
    fit = normal_fit(spl_series(clip, config.calibration_offset, config.frames).levels)
    return knn_classify(model, [fit.mean, fit.std]), fit


def classify_lecture(labels: Iterable[NoiseLabel]) -> NoiseLabel:
    """Strict majority of clip labels; equal counts give ``NoiseLabel.TIE``."""
    labels = [NoiseLabel(l) for l in labels]
    if not labels:
        raise AnalysisError("no clip labels")
    noisy = sum(l is NoiseLabel.NOISY for l in labels)
    quiet = sum(l is NoiseLabel.QUIET for l in labels)
    if noisy > quiet:
        return NoiseLabel.NOISY
    if quiet > noisy:
        return NoiseLabel.QUIET
    return NoiseLabel.TIE


def instructor_level(levels: Sequence[float], bin_width: float = 2.0, origin: float = 0.0) -> float:
    """Centre of the modal histogram bin of clip mean levels (ties -> lower bin)."""
    if len(levels) == 0:
        raise AnalysisError("no clip levels")
    counts = histogram(levels, bin_width, origin)
    top = max(counts.values())
    modal = min(b for b, c in counts.items() if c == top)
    return origin + (modal + 0.5) * bin_width


def differentiate_speaker(clip_level: float, instructor: float, delta: float = 3.0) -> Role:
    if not (np.isfinite(clip_level) and np.isfinite(instructor)):
        raise AnalysisError("levels must be finite")
    return Role.TEACHER if abs(clip_level - instructor) <= delta else Role.STUDENT


def speech_level_category(level: float, low: float = 55.0, high: float = 65.0) -> SpeechLevel:
    if level < low:
        return SpeechLevel.LOW
    if level > high:
        return SpeechLevel.HIGH
    return SpeechLevel.MEDIUM


@dataclass(frozen=True)
class Localization:
    quadrant: Position
    means: dict  # Position -> mean dBA


def localize_noise(
    clips: Mapping[Position, AudioClip] | Sequence[tuple[Position, AudioClip]],
    config: PipelineConfig = PipelineConfig(),
    tie_tolerance: float = 1e-9,
) -> Localization:
    """Quadrant whose recording has the highest mean A-weighted level.

    Raises ``AnalysisError`` unless exactly the four quadrants are given
    once each, and when the top two means are within ``tie_tolerance``.
    """
    pairs = list(clips.items()) if isinstance(clips, Mapping) else list(clips)
    positions = [Position(p) for p, _ in pairs]
    if len(pairs) != 4 or sorted(positions, key=lambda p: p.value) != sorted(QUADRANTS, key=lambda p: p.value):
        raise AnalysisError("need exactly one recording per quadrant")
    means = {
        p: normal_fit(spl_series(c, config.calibration_offset, config.frames).levels).mean
        for p, c in zip(positions, (c for _, c in pairs))
    }
    ranked = sorted(QUADRANTS, key=lambda p: means[p], reverse=True)
    if means[ranked[0]] - means[ranked[1]] <= tie_tolerance:
        raise AnalysisError(f"ambiguous localization: {ranked[0].value} and {ranked[1].value} tie")
    return Localization(ranked[0], {p: means[p] for p in QUADRANTS})


def _clip_stage(clip, knn, male, female, config):
    label, fit = classify_clip_noise(knn, clip, config)
    vectors = gender_features(clip, config.frames, config.silence_threshold_db)
    gender = classify_gender(male, female, vectors) if len(vectors) else Gender.UNKNOWN
    return label, fit, gender, len(vectors)


def analyze_clips(
    lecture_id: str,
    clips: Sequence[AudioClip],
    knn: KnnModel,
    male: GmmModel,
    female: GmmModel,
    config: PipelineConfig = PipelineConfig(),
    positions: Sequence[Position] | None = None,
    sequence: Sequence[int] | None = None,
) -> LectureRecord:
    """Analyze an in-memory lecture; clips are taken in the given order."""
    if not clips:
        raise AnalysisError(f"lecture {lecture_id!r} has no clips")
    positions = positions or [Position.UNSPECIFIED] * len(clips)
    sequence = sequence or list(range(len(clips)))
    staged = [_clip_stage(c, knn, male, female, config) for c in clips]

    level = instructor_level([fit.mean for _, fit, _, _ in staged], config.level_bin_db)
    verdicts = []
    for clip, pos, idx, (label, fit, gender, n_voiced) in zip(clips, positions, sequence, staged):
        role = differentiate_speaker(fit.mean, level, config.speaker_delta_db)
        verdicts.append(ClipVerdict(clip.id, idx, pos, label, fit, role, gender, n_voiced))

    teacher = [v.gender for v in verdicts if v.role is Role.TEACHER and v.gender is not Gender.UNKNOWN]
    n_male = teacher.count(Gender.MALE)
    n_female = teacher.count(Gender.FEMALE)
    if n_male > n_female:
        inst_gender = Gender.MALE
    elif n_female > n_male:
        inst_gender = Gender.FEMALE
    else:
        inst_gender = Gender.UNKNOWN

    return LectureRecord(
        lecture_id=lecture_id,
        noise_label=classify_lecture(v.noise_label for v in verdicts),
        instructor_level=level,
        speech_level=speech_level_category(level, config.level_low_db, config.level_high_db),
        instructor_gender=inst_gender,
        clips=tuple(verdicts),
    )


def analyze_lecture(
    manifest: LectureManifest,
    knn: KnnModel,
    male: GmmModel,
    female: GmmModel,
    config: PipelineConfig = PipelineConfig(),
) -> LectureRecord:
    entries = sorted(manifest.clips, key=lambda e: e.metadata.sequence_index)
    clips = [load_wav(e.path) for e in entries]
    return analyze_clips(
        manifest.lecture_id, clips, knn, male, female, config,
        positions=[e.metadata.position for e in entries],
        sequence=[e.metadata.sequence_index for e in entries],
    )


# ---------------------------------------------------------------- correlation

@dataclass(frozen=True)
class AssociationTest:
    table: ContingencyTable  # as observed, before empty categories are dropped
    chi_square: ChiSquareResult
    collapsed: ContingencyTable
    diff_proportions: float


@dataclass(frozen=True)
class CorrelationReport:
    noise_vs_speech_level: AssociationTest
    noise_vs_gender: AssociationTest
    n_lectures: int
    excluded_ties: int
    excluded_unknown_gender: int


NOISE_ROWS = (NoiseLabel.NOISY, NoiseLabel.QUIET)


def _table(records, column_of, columns) -> ContingencyTable:
    counts = np.zeros((2, len(columns)), dtype=int)
    for r in records:
        counts[NOISE_ROWS.index(r.noise_label), columns.index(column_of(r))] += 1
    if counts.sum() == 0:
        raise AnalysisError("no lectures to tabulate")
    return ContingencyTable(counts, tuple(l.value for l in NOISE_ROWS), tuple(c.value for c in columns))


def _association(table: ContingencyTable, collapsed: ContingencyTable) -> AssociationTest:
    try:
        chi = chi_square_independence(drop_empty(table))
        diff = diff_proportions(collapsed)
    except ValueError as exc:
        raise AnalysisError(f"degenerate table {table.counts.tolist()}: {exc}") from None
    return AssociationTest(table, chi, collapsed, diff)


def correlate(records: Iterable[LectureRecord]) -> CorrelationReport:
    """Noise label against instructor speech level and against instructor gender.

    Rows are (noisy, quiet). Speech levels form a 2x3 table whose empty
    categories are dropped before the chi-square test; the proportion
    difference uses the low vs medium+high collapse, i.e.
    P(low | noisy) - P(low | quiet). For gender it is
    P(male | noisy) - P(male | quiet). Tie lectures are left out, as are
    lectures of unknown instructor gender from the gender table.
    """
    records = list(records)
    decided = [r for r in records if r.noise_label is not NoiseLabel.TIE]
    levels = (SpeechLevel.LOW, SpeechLevel.MEDIUM, SpeechLevel.HIGH)
    speech = _table(decided, lambda r: r.speech_level, levels)
    speech_2x2 = collapse_columns(speech, [[0], [1, 2]], ("low", "medium_high"))

    gendered = [r for r in decided if r.instructor_gender is not Gender.UNKNOWN]
    gender = _table(gendered, lambda r: r.instructor_gender, (Gender.MALE, Gender.FEMALE))

    return CorrelationReport(
        noise_vs_speech_level=_association(speech, speech_2x2),
        noise_vs_gender=_association(gender, gender),
        n_lectures=len(records),
        excluded_ties=len(records) - len(decided),
        excluded_unknown_gender=len(decided) - len(gendered),
    )


# ---------------------------------------------------------------- JSON views

def record_to_dict(record: LectureRecord) -> dict:
    return {
        "lecture_id": record.lecture_id,
        "noise_label": record.noise_label.value,
        "instructor_level_dba": record.instructor_level,
        "speech_level": record.speech_level.value,
        "instructor_gender": record.instructor_gender.value,
        "clips": [
            {
                "clip_id": v.clip_id,
                "sequence_index": v.sequence_index,
                "position": v.position.value,
                "noise_label": v.noise_label.value,
                "spl_mean_dba": v.spl_fit.mean,
                "spl_std_db": v.spl_fit.std,
                "role": v.role.value,
                "gender": v.gender.value,
                "voiced_frames": v.voiced_frames,
            }
            for v in record.clips
        ],
    }


def record_from_dict(d: dict) -> LectureRecord:
    try:
        clips = tuple(
            ClipVerdict(
                c["clip_id"], int(c["sequence_index"]), Position(c["position"]),
                NoiseLabel(c["noise_label"]), NormalFit(float(c["spl_mean_dba"]), float(c["spl_std_db"])),
                Role(c["role"]), Gender(c["gender"]), int(c["voiced_frames"]),
            )
            for c in d.get("clips", [])
        )
        return LectureRecord(
            d["lecture_id"], NoiseLabel(d["noise_label"]), float(d["instructor_level_dba"]),
            SpeechLevel(d["speech_level"]), Gender(d["instructor_gender"]), clips,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise AnalysisError(f"malformed lecture record: {exc}") from None


def _table_dict(t: ContingencyTable) -> dict:
    return {"rows": list(t.row_labels), "columns": list(t.col_labels), "counts": t.counts.tolist()}


def _association_dict(a: AssociationTest) -> dict:
    return {
        "table": _table_dict(a.table),
        "chi_square": {"statistic": a.chi_square.statistic, "dof": a.chi_square.dof, "p_value": a.chi_square.p_value},
        "collapsed_table": _table_dict(a.collapsed),
        "diff_proportions": a.diff_proportions,
    }


def report_to_dict(report: CorrelationReport) -> dict:
    return {
        "noise_vs_speech_level": _association_dict(report.noise_vs_speech_level),
        "noise_vs_gender": _association_dict(report.noise_vs_gender),
        "counts": {
            "lectures": report.n_lectures,
            "excluded_ties": report.excluded_ties,
            "excluded_unknown_gender": report.excluded_unknown_gender,
        },
    }
