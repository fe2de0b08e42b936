"""Sweep generator parameters and report the statistics used for calibration.

For each (mu, closure_prob) pair: friend share, isolated fraction, relation
type proportions, and the influence-only crossing point.
"""
import argparse
import itertools

from triadic.experiments import curve_models
from triadic.graph import relation_type_distribution, two_path_histogram
from triadic.mlp import TrainConfig, crossing_point, ensemble_curve
from triadic.synth import SynthConfig, generate_network


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mu", type=float, nargs="+", default=[-3.0, 0.0, 5.0])
    parser.add_argument("--closure", type=float, nargs="+", default=[0.5, 0.7])
    parser.add_argument("--schools", type=int, default=4)
    parser.add_argument("--seeds", type=int, default=3)
    args = parser.parse_args()

    print("mu     closure friend  isolated  +1     +2     -1     -2     crossing")
    for mu, closure in itertools.product(args.mu, args.closure):
        g = generate_network(SynthConfig(n_schools=args.schools, mu=mu, closure_prob=closure))
        d = relation_type_distribution(g)
        models = curve_models(g, "influence_only", range(args.seeds), config=TrainConfig())
        cross = crossing_point(ensemble_curve(models))
        print(f"{mu:6.1f} {closure:7.2f} {d.get(1, 0) + d.get(2, 0):6.3f} {two_path_histogram(g).get(0, 0):9.4f} "
              f"{d.get(1, 0):6.3f} {d.get(2, 0):6.3f} {d.get(-1, 0):6.3f} {d.get(-2, 0):6.3f} {cross:8.2f}")


if __name__ == "__main__":
    main()
