"""Learned friend probability as a function of influence and of prosociality.

Trains an influence-only ensemble on a calibrated corpus and a
prosociality-only ensemble on nucleated data, then prints the crossing point
and the probability surface.
"""
import argparse

import numpy as np

from triadic.dataset import BROAD_SCHEME
from triadic.experiments import curve_models
from triadic.mlp import crossing_point, ensemble_curve, ensemble_surface
from triadic.synth import SynthConfig, generate_network, nucleate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--schools", type=int, default=13)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--data-seed", type=int, default=0)
    args = parser.parse_args()

    config = SynthConfig(n_schools=args.schools, seed=args.data_seed)
    models = curve_models(generate_network(config), "influence_only", range(args.seeds))
    curve = ensemble_curve(models)
    print(f"p_friend crosses 0.5 at I = {crossing_point(curve):.2f}")
    for row in curve[::8]:
        print(f"  I={row[0]:6.1f}  p_friend={row[1]:.3f} +- {row[2]:.3f}")

    models = curve_models(nucleate(config), "prosociality_only", range(args.seeds), BROAD_SCHEME,
                          connected_only=False)
    mean, sem = ensemble_surface(models)
    np.set_printoptions(precision=3, suppress=True)
    print("p_friend by nominator (rows) and nominee (columns) prosociality:")
    print(mean)
    print(f"P(enemy | 0, 0) = {1 - mean[0, 0]:.3f}   P(friend | 1, 1) = {mean[-1, -1]:.3f}")


if __name__ == "__main__":
    main()
