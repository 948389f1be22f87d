import struct

import numpy as np
import pytest

from classroom_acoustics.models import gmm_train, knn_train
from classroom_acoustics.features import gender_features, spl_series
from classroom_acoustics.stats import normal_fit
from classroom_acoustics.synth import ScenarioConfig, lecture_clips, plan_corpus


def wav_bytes(pcm: bytes, channels=1, rate=16000, bits=16, tag=1, data_size=None) -> bytes:
    """Hand-built RIFF/WAVE image, independent of the stdlib writer."""
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    size = len(pcm) if data_size is None else data_size
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", size) + pcm
    return b"RIFF" + struct.pack("<I", len(body)) + body


SMALL = ScenarioConfig(seed=7, n_lectures=8, clips_per_lecture=10)


@pytest.fixture(scope="session")
def small_corpus():
    """(plans, clips per lecture) for a compact in-memory scenario."""
    plans = plan_corpus(SMALL)
    return plans, [lecture_clips(SMALL, p, i) for i, p in enumerate(plans)]


@pytest.fixture(scope="session")
def trained_models(small_corpus):
    """k-NN on every clip plus male/female GMMs on teacher (quiet) clips."""
    plans, clips = small_corpus
    points, labels = [], []
    vectors = {"male": [], "female": []}
    for plan, lecture in zip(plans, clips):
        for clip, label in zip(lecture, plan.clip_labels):
            fit = normal_fit(spl_series(clip).levels)
            points.append([fit.mean, fit.std])
            labels.append(label)
            if label == "quiet":
                vectors[plan.gender].append(gender_features(clip))
    knn = knn_train(points, labels, 5)
    male = gmm_train(np.vstack(vectors["male"]), 4, seed=0, label="male")
    female = gmm_train(np.vstack(vectors["female"]), 4, seed=0, label="female")
    return knn, male, female


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
