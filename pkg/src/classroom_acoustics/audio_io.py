"""Audio clip and lecture manifest loading.

Only uncompressed PCM WAV is supported (8-bit unsigned or 16-bit signed,
mono or stereo). Stereo is averaged to mono and integer samples are scaled
to [-1, 1]; nothing is resampled.
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class AudioError(Exception):
    """Base class for audio and manifest loading failures."""


class MissingFileError(AudioError, FileNotFoundError):
    pass


class NotPcmError(AudioError):
    """The file is not RIFF/WAVE or its format tag is not PCM."""


class UnsupportedBitDepthError(AudioError):
    pass


class TruncatedDataError(AudioError):
    """The data chunk is shorter than its header claims (or absent)."""


class ManifestError(AudioError):
    pass


class Position(enum.Enum):
    FRONT_LEFT = "front_left"
    FRONT_RIGHT = "front_right"
    BACK_LEFT = "back_left"
    BACK_RIGHT = "back_right"
    UNSPECIFIED = "unspecified"

    @classmethod
    def parse(cls, text: str) -> "Position":
        try:
            return cls(text)
        except ValueError:
            raise ManifestError(f"unknown position {text!r}") from None


QUADRANTS = (
    Position.FRONT_LEFT,
    Position.FRONT_RIGHT,
    Position.BACK_LEFT,
    Position.BACK_RIGHT,
)


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono samples in [-1, 1] at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: int
    id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)) or np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples must be finite and lie in [-1, 1]")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError("sample_rate must be a positive integer")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def scaled(self, gain: float) -> "AudioClip":
        return AudioClip(np.clip(self.samples * gain, -1.0, 1.0), self.sample_rate, self.id)


@dataclass(frozen=True)
class ClipMetadata:
    lecture_id: str
    position: Position = Position.UNSPECIFIED
    sequence_index: int = 0


@dataclass(frozen=True)
class ClipEntry:
    path: Path
    metadata: ClipMetadata


@dataclass(frozen=True)
class LectureManifest:
    lecture_id: str
    clips: tuple[ClipEntry, ...]
    instructor_label: str | None = None
    source: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.clips:
            raise ManifestError(f"lecture {self.lecture_id!r} has no clips")
        paths = [c.path for c in self.clips]
        if len(set(paths)) != len(paths):
            raise ManifestError("clip paths must be distinct")
        indices = [c.metadata.sequence_index for c in self.clips]
        if len(set(indices)) != len(indices):
            raise ManifestError("duplicate sequence_index in manifest")
        if self.instructor_label not in (None, "male", "female"):
            raise ManifestError(f"bad instructor_label {self.instructor_label!r}")


def _read_chunks(data: bytes, path: Path):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotPcmError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        yield cid, size, data[pos + 8:pos + 8 + size]
        pos += 8 + size + (size & 1)


def load_wav(path) -> AudioClip:
    """Read a PCM WAV file into a mono :class:`AudioClip`.

    Raises
    ------
    MissingFileError, NotPcmError, UnsupportedBitDepthError, TruncatedDataError
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise MissingFileError(f"{path}: no such file") from None

    fmt = None
    for cid, size, body in _read_chunks(data, path):
        if cid == b"fmt ":
            if len(body) < 16:
                raise TruncatedDataError(f"{path}: short fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            if fmt is None:
                raise NotPcmError(f"{path}: data chunk before fmt chunk")
            tag, channels, rate, _, block_align, bits = fmt
            if tag != 1:
                raise NotPcmError(f"{path}: format tag {tag} is not PCM")
            if bits not in (8, 16):
                raise UnsupportedBitDepthError(f"{path}: {bits}-bit samples")
            if channels not in (1, 2):
                raise NotPcmError(f"{path}: {channels} channels")
            if len(body) < size or size % block_align:
                raise TruncatedDataError(f"{path}: data chunk truncated")
            if size == 0:
                raise TruncatedDataError(f"{path}: empty data chunk")
            if bits == 16:
                pcm = np.frombuffer(body, dtype="<i2").astype(np.float64) / 32768.0
            else:
                pcm = (np.frombuffer(body, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
            pcm = pcm.reshape(-1, channels).mean(axis=1)
            return AudioClip(np.clip(pcm, -1.0, 1.0), rate, path.stem)
    if fmt is None:
        raise NotPcmError(f"{path}: no fmt chunk")
    raise TruncatedDataError(f"{path}: no data chunk")


def load_manifest(path) -> LectureManifest:
    """Parse a lecture manifest; relative clip paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise MissingFileError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")

    try:
        lecture_id = str(doc["lecture_id"])
        entries = []
        for item in doc["clips"]:
            index = item["sequence_index"]
            if not isinstance(index, int) or isinstance(index, bool):
                raise ManifestError(f"{path}: sequence_index must be an integer")
            meta = ClipMetadata(lecture_id, Position.parse(item.get("position", "unspecified")), index)
            clip_path = Path(item["path"])
            if not clip_path.is_absolute():
                clip_path = path.parent / clip_path
            entries.append(ClipEntry(clip_path, meta))
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{path}: malformed manifest ({exc})") from None

    return LectureManifest(lecture_id, tuple(entries), doc.get("instructor_label"), path)
