"""Command-line interface.

Subcommands: features, train, lecture, localize, correlate, synth.
Machine-readable output goes to stdout or ``--out``; diagnostics go to
stderr. Exit codes: 0 success, 1 usage, 2 data/validation, 3 internal.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import jsonfmt
from .audio_io import QUADRANTS, AudioError, Position, load_manifest, load_wav
from .dsp import FrameParams
from .features import PLP_ORDER, gender_features, spl_series
from .models import (
    ModelError,
    NoiseLabel,
    cross_validate,
    gmm_train,
    knn_train,
    load_model,
    save_model,
)
from .pipeline import (
    AnalysisError,
    PipelineConfig,
    analyze_lecture,
    correlate,
    localize_noise,
    record_from_dict,
    record_to_dict,
    report_to_dict,
)
from .stats import normal_fit
from .synth import ScenarioConfig, gen_lecture_corpus, gen_quadrant_scenario, write_quadrant_scenario

log = logging.getLogger("classroom_acoustics")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    frame_len_ms: float = 32.0
    overlap: float = 0.5
    calibration_offset_db: float = 94.0
    knn_k: int = 5
    gmm_components: int = 4
    seed: int = 0
    speaker_delta_db: float = 3.0
    level_low_db: float = 55.0
    level_high_db: float = 65.0
    level_bin_db: float = 2.0
    silence_threshold_db: float = 30.0
    cv_folds: int = 3

    @property
    def frames(self) -> FrameParams:
        return FrameParams(self.frame_len_ms, self.overlap)

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            frames=self.frames,
            calibration_offset=self.calibration_offset_db,
            silence_threshold_db=self.silence_threshold_db,
            speaker_delta_db=self.speaker_delta_db,
            level_bin_db=self.level_bin_db,
            level_low_db=self.level_low_db,
            level_high_db=self.level_high_db,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(CliConfig)}


def resolve_config(args: argparse.Namespace) -> CliConfig:
    """Defaults, then the optional JSON config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(doc) - set(CONFIG_FIELDS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(doc)
    for name in CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    cfg = CliConfig(**values)
    if cfg.knn_k < 1 or cfg.knn_k % 2 == 0:
        raise UsageError("--knn-k must be a positive odd integer")
    try:
        cfg.pipeline()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


# ---------------------------------------------------------------- output helpers

def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(obj: dict, cfg: CliConfig, out: str | None) -> None:
    _emit(jsonfmt.dumps({**obj, "config": cfg.to_dict()}, jsonfmt.REPORT_FLOAT), out)


# ---------------------------------------------------------------- commands

def cmd_features(args, cfg: CliConfig) -> int:
    clips = [load_wav(p) for p in args.wavs]  # fail before writing anything
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    ceps = [f"c{i}" for i in range(PLP_ORDER + 1)]
    writer.writerow(["kind", "clip_id", "frame_index", "level_dba", "pitch", *ceps])
    blank = [""] * (PLP_ORDER + 2)
    for clip in clips:
        spl = spl_series(clip, cfg.calibration_offset_db, cfg.frames)
        for i, level in enumerate(spl.levels):
            writer.writerow(["spl", clip.id, i, f"{level:.6f}", *blank])
        vectors, idx = gender_features(clip, cfg.frames, cfg.silence_threshold_db, with_index=True)
        for i, v in zip(idx, vectors):
            writer.writerow(["gender", clip.id, int(i), "", *(f"{x:.6f}" for x in v)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _load_manifests(paths):
    manifests = sorted((load_manifest(p) for p in paths), key=lambda m: m.lecture_id)
    ids = [m.lecture_id for m in manifests]
    if len(set(ids)) != len(ids):
        raise AnalysisError("duplicate lecture_id across manifests")
    return manifests


def _load_truth(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise AnalysisError(f"cannot read truth file {path}: {exc}") from None


def _clip_truth(truth: dict, manifest, entry) -> str:
    try:
        labels = truth[manifest.lecture_id]["clip_labels"]
        return labels[entry.metadata.sequence_index]
    except (KeyError, IndexError, TypeError):
        raise AnalysisError(
            f"truth file has no label for {manifest.lecture_id} clip {entry.metadata.sequence_index}"
        ) from None


def cmd_train(args, cfg: CliConfig) -> int:
    manifests = _load_manifests(args.manifests)
    truth = _load_truth(args.truth) if args.truth else None
    pcfg = cfg.pipeline()

    if args.mode == "noise":
        if truth is None:
            raise UsageError("train noise needs --truth with per-clip labels")
        points, labels = [], []
        for m in manifests:
            for e in sorted(m.clips, key=lambda e: e.metadata.sequence_index):
                fit = normal_fit(spl_series(load_wav(e.path), pcfg.calibration_offset, pcfg.frames).levels)
                points.append([fit.mean, fit.std])
                labels.append(NoiseLabel(_clip_truth(truth, m, e)))
        for cls in (NoiseLabel.NOISY, NoiseLabel.QUIET):
            n = labels.count(cls)
            if n < max(2, cfg.cv_folds):
                raise ModelError(f"only {n} {cls.value} clip(s); need at least {max(2, cfg.cv_folds)}")
        model = knn_train(points, labels, cfg.knn_k)
        error = cross_validate(points, labels, cfg.cv_folds, cfg.knn_k, cfg.seed)
        out = Path(args.out or "knn.json")
        save_model(model, out)
        log.info("k-NN model with %d points written to %s", len(labels), out)
        _report({"model": str(out), "clips": len(labels), "cv_folds": cfg.cv_folds,
                 "cv_error": error}, cfg, None)
        return EXIT_OK

    vectors = {"male": [], "female": []}
    for m in manifests:
        if m.instructor_label not in vectors:
            raise ModelError(f"manifest {m.lecture_id} has no instructor_label")
        for e in m.clips:
            if truth is not None and _clip_truth(truth, m, e) != NoiseLabel.QUIET.value:
                continue  # keep teacher-dominated clips only
            v = gender_features(load_wav(e.path), pcfg.frames, pcfg.silence_threshold_db)
            if len(v):
                vectors[m.instructor_label].append(v)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for gender, chunks in vectors.items():
        x = np.vstack(chunks) if chunks else np.empty((0, PLP_ORDER + 2))
        model = gmm_train(x, cfg.gmm_components, cfg.seed, label=gender)
        path = out_dir / f"{gender}.json"
        save_model(model, path)
        summary[gender] = {"model": str(path), "vectors": int(x.shape[0]),
                           "iterations": len(model.history), "loglik": model.history[-1]}
    _report(summary, cfg, None)
    return EXIT_OK


def cmd_lecture(args, cfg: CliConfig) -> int:
    manifest = load_manifest(args.manifest)
    knn, male, female = load_model(args.knn), load_model(args.male), load_model(args.female)
    record = analyze_lecture(manifest, knn, male, female, cfg.pipeline())
    _report(record_to_dict(record), cfg, args.out)
    return EXIT_OK


def cmd_localize(args, cfg: CliConfig) -> int:
    pairs = args.clip or []
    if len(pairs) != 4:
        raise UsageError(f"localize needs exactly 4 --clip arguments, got {len(pairs)}")
    positions = []
    for name, _ in pairs:
        try:
            positions.append(Position(name))
        except ValueError:
            raise UsageError(f"unknown quadrant {name!r}") from None
    if len(set(positions)) != 4 or not set(positions) <= set(QUADRANTS):
        raise UsageError("each of the four quadrants must appear exactly once")
    clips = [(p, load_wav(path)) for p, (_, path) in zip(positions, pairs)]
    result = localize_noise(clips, cfg.pipeline())
    print(result.quadrant.value)
    if args.out:
        doc = {"quadrant": result.quadrant.value,
               "means_dba": {p.value: m for p, m in result.means.items()}}
        _report(doc, cfg, args.out)
    return EXIT_OK


def cmd_correlate(args, cfg: CliConfig) -> int:
    records = []
    for path in args.records:
        try:
            records.append(record_from_dict(json.loads(Path(path).read_text())))
        except (OSError, json.JSONDecodeError) as exc:
            raise AnalysisError(f"cannot read record {path}: {exc}") from None
    if len(records) < 2:
        raise AnalysisError("correlate needs at least two lecture records")
    records.sort(key=lambda r: r.lecture_id)
    _report(report_to_dict(correlate(records)), cfg, args.out)
    return EXIT_OK


def cmd_synth(args, cfg: CliConfig) -> int:
    out = Path(args.out_dir)
    if args.scenario == "quadrant":
        clips = gen_quadrant_scenario(Position(args.source), args.source_amp, args.sample_rate,
                                      cfg.seed, args.clip_seconds)
        path = write_quadrant_scenario(clips, out)
        log.info("quadrant scenario written to %s", path)
        return EXIT_OK
    scenario = ScenarioConfig(
        seed=cfg.seed,
        n_lectures=args.lectures,
        clips_per_lecture=args.clips,
        clip_seconds=args.clip_seconds,
        sample_rate=args.sample_rate,
        calibration_offset=cfg.calibration_offset_db,
        level_noise_coupling=args.coupling,
    )
    corpus = gen_lecture_corpus(scenario, out)
    log.info("%d lectures written to %s", len(corpus.manifests), out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    g = p.add_argument_group("analysis configuration (defaults in parentheses)")
    g.add_argument("--config", help="JSON file with any of the options below; flags override it")
    g.add_argument("--frame-len-ms", dest="frame_len_ms", type=float, help="frame length (32)")
    g.add_argument("--overlap", type=float, help="fractional frame overlap (0.5)")
    g.add_argument("--calibration-offset-db", dest="calibration_offset_db", type=float,
                   help="dBA of a full-scale 1 kHz sine (94)")
    g.add_argument("--knn-k", dest="knn_k", type=int, help="neighbours for noisy/quiet k-NN (5)")
    g.add_argument("--gmm-components", dest="gmm_components", type=int, help="components per gender GMM (4)")
    g.add_argument("--seed", type=int, help="random seed (0)")
    g.add_argument("--speaker-delta-db", dest="speaker_delta_db", type=float,
                   help="max distance from the instructor level for a teacher clip (3)")
    g.add_argument("--level-low-db", dest="level_low_db", type=float, help="low/medium speech boundary (55)")
    g.add_argument("--level-high-db", dest="level_high_db", type=float, help="medium/high speech boundary (65)")
    g.add_argument("--level-bin-db", dest="level_bin_db", type=float, help="instructor-level histogram bin (2)")
    g.add_argument("--silence-threshold-db", dest="silence_threshold_db", type=float,
                   help="silence gate below the 95th-percentile frame level (30)")
    g.add_argument("--cv-folds", dest="cv_folds", type=int, help="cross-validation folds (3)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _config_flags()
    parser = _Parser(prog="classroom-acoustics", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("features", parents=[common], help="dump SPL and gender features as CSV")
    p.add_argument("wavs", nargs="+")
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common], help="train gender GMMs or the noise k-NN")
    p.add_argument("mode", choices=["gender", "noise"])
    p.add_argument("manifests", nargs="+")
    p.add_argument("--truth", help="truth JSON with per-clip noisy/quiet labels")
    p.add_argument("--out", help="model file (noise) or output directory (gender)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("lecture", parents=[common], help="analyze one lecture manifest")
    p.add_argument("manifest")
    p.add_argument("--knn", required=True)
    p.add_argument("--male", required=True)
    p.add_argument("--female", required=True)
    p.add_argument("--out", help="record JSON file (default stdout)")
    p.set_defaults(func=cmd_lecture)

    p = sub.add_parser("localize", parents=[common], help="find the noisiest quadrant of four recordings")
    p.add_argument("--clip", nargs=2, action="append", metavar=("QUADRANT", "WAV"),
                   help="front_left|front_right|back_left|back_right and a WAV path; give four")
    p.add_argument("--out", help="JSON file with the four fit means")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("correlate", parents=[common], help="chi-square tests over lecture records")
    p.add_argument("records", nargs="+")
    p.add_argument("--out", help="report JSON file (default stdout)")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--scenario", choices=["lectures", "quadrant"], default="lectures")
    p.add_argument("--lectures", type=int, default=30)
    p.add_argument("--clips", type=int, default=20)
    p.add_argument("--clip-seconds", dest="clip_seconds", type=float, default=2.0)
    p.add_argument("--sample-rate", dest="sample_rate", type=int, default=16000)
    p.add_argument("--coupling", type=float, default=0.0,
                   help="probability that speech level follows the noise label")
    p.add_argument("--source", default="back_left", choices=[q.value for q in QUADRANTS])
    p.add_argument("--source-amp", dest="source_amp", type=float, default=0.3)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args, resolve_config(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AudioError, ModelError, AnalysisError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
