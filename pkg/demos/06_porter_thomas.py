#!/usr/bin/env python3
"""Anticoncentration: when does a random circuit's output look like
chaos?

Two signatures computed from exact state vectors of a 4x4 lattice as
depth grows: the Kolmogorov-Smirnov distance between the rescaled
output probabilities and the exponential law that an ideally random
state obeys, and the half-cut entanglement entropy approaching its
n/2-bit ceiling. Both converge within a handful of layers.
"""
import numpy as np

from supeps import (anticoncentration_depth, bitstring_probabilities,
                    entropy_profile, generate_instance, ptd_distance,
                    statevector_run)

N = 16


def main():
    print("4x4 fsim(pi/2, pi/6), exact state vectors, seed 1\n")
    print(f"{'depth':>5} {'KS to exp law':>14} {'half-cut bits':>14}")
    first_below = None
    for depth in (2, 4, 6, 8, 12, 16, 20):
        inst = generate_instance(4, 4, depth, "fsim", 1,
                                 fsim_angles=(np.pi / 2, np.pi / 6))
        psi = statevector_run(inst)
        probs = bitstring_probabilities(psi.amplitudes)
        ks = ptd_distance(probs)
        s_half = entropy_profile(psi)[N // 2 - 1]
        if first_below is None and ks < 0.05:
            first_below = depth
        print(f"{depth:5d} {ks:14.4f} {s_half:14.3f}")

    predicted = anticoncentration_depth(N, beta=2.03)
    print(f"\nfirst scanned depth with KS < 0.05: {first_below}")
    print(f"closed-form prediction (beta/2) log2 n at beta=2.03: "
          f"{predicted:.1f}")
    print(f"entropy ceiling for a 16-qubit half cut: {N // 2} bits")
    print("a depth-20 state is statistically indistinguishable from a")
    print("uniformly random one by either measure.")


if __name__ == "__main__":
    main()
