import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from classroom_acoustics.audio_io import QUADRANTS, Position, load_manifest, load_wav
from classroom_acoustics.features import estimate_pitch, pitch_track, spl_series
from classroom_acoustics.synth import (
    ScenarioConfig,
    a_weighted_level,
    gen_lecture_corpus,
    gen_noise,
    gen_quadrant_scenario,
    gen_tone,
    gen_voiced,
    lecture_clips,
    plan_corpus,
    scale_to_level,
    write_quadrant_scenario,
    write_wav,
)

RATE = 16000


def test_tone_and_noise_shapes():
    t = gen_tone(440.0, 0.5, 0.3, RATE)
    assert t.samples.size == 8000 and np.max(np.abs(t.samples)) == pytest.approx(0.3, abs=1e-3)
    n = gen_noise(0.2, 0.5, RATE, seed=1)
    assert np.max(np.abs(n.samples)) <= 0.2
    np.testing.assert_array_equal(n.samples, gen_noise(0.2, 0.5, RATE, seed=1).samples)


@settings(max_examples=30, deadline=None)
@given(st.floats(80, 350))
def test_voiced_pitch_is_recovered(f0):
    frame = gen_voiced(f0, 512 / RATE, 0.5, RATE).samples
    p = estimate_pitch(frame, RATE)
    lag = RATE / f0
    # the estimate is quantized to an integer lag
    assert p is not None and abs(RATE / p - lag) <= 1.0


def test_voiced_range_enforced():
    with pytest.raises(ValueError):
        gen_voiced(50.0, 0.1, 0.5, RATE)


def test_scale_to_level():
    x = np.random.default_rng(0).uniform(-1, 1, RATE)
    y = scale_to_level(x, RATE, -30.0)
    assert a_weighted_level(y, RATE) == pytest.approx(-30.0, abs=1e-9)


def test_write_wav_round_trip(tmp_path):
    clip = gen_voiced(150.0, 0.3, 0.6, RATE)
    loaded = load_wav(write_wav(clip, tmp_path / "v.wav"))
    assert loaded.sample_rate == RATE
    np.testing.assert_allclose(loaded.samples, clip.samples, atol=1 / 32768)


class TestPlans:
    def test_deterministic(self):
        cfg = ScenarioConfig(seed=3, n_lectures=6, clips_per_lecture=5)
        assert plan_corpus(cfg) == plan_corpus(cfg)
        a = lecture_clips(cfg, plan_corpus(cfg)[0], 0)
        b = lecture_clips(cfg, plan_corpus(cfg)[0], 0)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.samples, y.samples)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 25))
    def test_planted_label_is_strict_majority(self, seed, m):
        cfg = ScenarioConfig(seed=seed, n_lectures=6, clips_per_lecture=m)
        for plan in plan_corpus(cfg):
            noisy = plan.clip_labels.count("noisy")
            quiet = m - noisy
            assert noisy != quiet
            assert (noisy > quiet) == (plan.noise_label == "noisy") or m == 1

    def test_explicit_plans(self):
        cfg = ScenarioConfig(n_lectures=3, clips_per_lecture=3, gender_plan=("male", "female", "male"),
                             level_plan=("low", "high", "medium"))
        plans = plan_corpus(cfg)
        assert [p.gender for p in plans] == ["male", "female", "male"]
        assert [p.speech_level for p in plans] == ["low", "high", "medium"]
        with pytest.raises(ValueError):
            ScenarioConfig(n_lectures=2, gender_plan=("male",))

    def test_full_coupling(self):
        plans = plan_corpus(ScenarioConfig(n_lectures=20, level_noise_coupling=1.0))
        assert all((p.speech_level == "low") == (p.noise_label == "noisy") for p in plans)

    def test_teacher_clip_levels(self, small_corpus):
        plans, clips = small_corpus
        for plan, lecture in zip(plans, clips):
            for clip, label in zip(lecture, plan.clip_labels):
                level = spl_series(clip).levels.mean()
                if label == "quiet":
                    assert level == pytest.approx(plan.instructor_level_dba, abs=1.5)
                else:
                    # babble only adds energy; loud teachers may sit close to it
                    assert level > plan.instructor_level_dba + 1.0


def test_corpus_on_disk(tmp_path):
    cfg = ScenarioConfig(seed=1, n_lectures=2, clips_per_lecture=3, clip_seconds=0.5)
    corpus = gen_lecture_corpus(cfg, tmp_path)
    assert sorted(corpus.truth) == ["L000", "L001"]
    m = load_manifest(corpus.manifests[0])
    assert m.lecture_id == "L000" and len(m.clips) == 3
    assert m.instructor_label == corpus.truth["L000"]["gender"]
    assert (tmp_path / "truth.json").exists() and (tmp_path / "scenario.json").exists()


class TestQuadrants:
    @pytest.mark.parametrize("q", QUADRANTS)
    def test_nearest_is_loudest(self, q):
        clips = gen_quadrant_scenario(q, seed=5)
        levels = {p: spl_series(c).levels.mean() for p, c in clips.items()}
        assert max(levels, key=levels.get) is q

    def test_not_a_quadrant(self):
        with pytest.raises(ValueError):
            gen_quadrant_scenario(Position.UNSPECIFIED)

    def test_written_manifest(self, tmp_path):
        path = write_quadrant_scenario(gen_quadrant_scenario(Position.BACK_LEFT, dur=0.5), tmp_path)
        m = load_manifest(path)
        assert sorted(e.metadata.position.value for e in m.clips) == sorted(q.value for q in QUADRANTS)


def test_tone_boundaries():
    with pytest.raises(ValueError):
        gen_tone(0.0, 0.1, 0.5, RATE)
    with pytest.raises(ValueError):
        gen_tone(8000.0, 0.1, 0.5, RATE)
    assert gen_tone(7999.0, 0.1, 0.5, RATE).samples.size == 1600
    assert not np.any(gen_tone(440.0, 0.1, 0.0, RATE).samples)
    assert np.max(gen_tone(1000.0, 1.0, 1.0, RATE).samples) >= 0.999


def test_silent_noise():
    assert not np.any(gen_noise(0.0, 0.2, RATE, seed=0).samples)


def test_voiced_120_interior_track():
    pitch = pitch_track(gen_voiced(120.0, 1.0, 0.5, RATE)).pitch[1:-1]
    np.testing.assert_allclose(pitch, 120.0, atol=3.0)


def test_male_and_female_tracks_separate():
    low = pitch_track(gen_voiced(120.0, 1.0, 0.5, RATE)).pitch
    high = pitch_track(gen_voiced(250.0, 1.0, 0.5, RATE)).pitch
    assert np.nanmax(low) < np.nanmin(high)


def test_quadrant_clips_share_shape():
    clips = gen_quadrant_scenario(Position.FRONT_RIGHT, seed=1, dur=0.5)
    assert {(len(c), c.sample_rate) for c in clips.values()} == {(8000, RATE)}
