"""Quadrant localization accuracy against source amplitude.

    python scripts/localization_trials.py --seeds 20 --amps 0.01 0.1 0.3

Each trial plants one source per quadrant and counts correct verdicts.
"""
import argparse

from classroom_acoustics.audio_io import QUADRANTS
from classroom_acoustics.pipeline import localize_noise
from classroom_acoustics.synth import gen_quadrant_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--amps", type=float, nargs="+", default=[0.003, 0.03, 0.3])
    ap.add_argument("--seconds", type=float, default=2.0)
    args = ap.parse_args()

    print("source_amp,correct,trials")
    for amp in args.amps:
        correct = trials = 0
        for seed in range(args.seeds):
            for q in QUADRANTS:
                clips = gen_quadrant_scenario(q, amp, seed=seed, dur=args.seconds)
                correct += localize_noise(clips).quadrant is q
                trials += 1
        print(f"{amp},{correct},{trials}")


if __name__ == "__main__":
    main()
