"""Sample the regularity function of the gamma-epigraph / x-axis pair."""

import math

import numpy as np

from karamata.operators import CoordinatePlane, GammaEpigraph, Singleton, projector
from karamata.solver import estimate_empirical_psi


def main(samples_per_a=256):
    ops = [projector(GammaEpigraph()), projector(CoordinatePlane(1))]
    a = np.logspace(-6, -2, 5)
    est = estimate_empirical_psi(ops, Singleton((0.0, 0.0)), math.hypot(0.3, 0.2), a,
                                 samples_per_a=samples_per_a)
    print(f"{'a':>10} {'Phi_hat':>12} {'/(-sqrt(a) ln a)':>18} {'/sqrt(a)':>10}")
    for ai, v in zip(a, est.values):
        print(f"{ai:10.1e} {v:12.5e} {v / (-math.sqrt(ai) * math.log(ai)):18.4f} {v / math.sqrt(ai):10.3f}")


if __name__ == "__main__":
    main()
