"""Acoustical quality assessment of recorded lectures."""

from .audio_io import AudioClip, LectureManifest, Position, load_manifest, load_wav
from .dsp import FrameParams
from .features import gender_features, pitch_track, rasta_plp, spl_series
from .models import Gender, NoiseLabel, classify_gender, gmm_train, knn_classify, knn_train
from .pipeline import PipelineConfig, analyze_lecture, correlate, localize_noise

__version__ = "0.1.0"
