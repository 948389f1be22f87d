"""Noisy/quiet protocol on a synthetic corpus: CV error and lecture accuracy against k.

    python scripts/noise_protocol.py --seeds 0 1 2 --k 1 3 5 7 9

Prints one CSV row per (seed, k).
"""
import argparse
import csv
import sys

from classroom_acoustics.features import spl_series
from classroom_acoustics.models import NoiseLabel, cross_validate_predictions
from classroom_acoustics.pipeline import classify_lecture
from classroom_acoustics.stats import normal_fit
from classroom_acoustics.synth import ScenarioConfig, lecture_clips, plan_corpus


def corpus_points(config):
    points, labels, owner = [], [], []
    plans = plan_corpus(config)
    for i, plan in enumerate(plans):
        for clip, label in zip(lecture_clips(config, plan, i), plan.clip_labels):
            fit = normal_fit(spl_series(clip).levels)
            points.append([fit.mean, fit.std])
            labels.append(NoiseLabel(label))
            owner.append(i)
    return plans, points, labels, owner


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--k", type=int, nargs="+", default=[1, 3, 5, 7, 9])
    ap.add_argument("--folds", type=int, default=3)
    ap.add_argument("--lectures", type=int, default=30)
    ap.add_argument("--clips", type=int, default=20)
    args = ap.parse_args()

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["seed", "k", "cv_error", "lecture_accuracy"])
    for seed in args.seeds:
        config = ScenarioConfig(seed=seed, n_lectures=args.lectures, clips_per_lecture=args.clips)
        plans, points, labels, owner = corpus_points(config)
        for k in args.k:
            pred = cross_validate_predictions(points, labels, args.folds, k, seed)
            error = sum(p != t for p, t in zip(pred, labels)) / len(labels)
            hits = sum(
                classify_lecture([p for p, o in zip(pred, owner) if o == i]).value == plan.noise_label
                for i, plan in enumerate(plans)
            )
            out.writerow([seed, k, f"{error:.4f}", f"{hits / len(plans):.4f}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
