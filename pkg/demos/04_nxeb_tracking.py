#!/usr/bin/env python3
"""Cross-entropy benchmarking against the truth it estimates.

The linear cross-entropy score F_nxeb is computed from the exact
output distribution evaluated on the truncated network's amplitudes.
While the network still carries real signal (F_ex above the 2^-n
floor) the score tracks the exact fidelity point for point; past
saturation it fluctuates around the same floor instead of following
F_apx down. A chi=16 cap on a 4x4 lattice keeps every contraction
cheap enough to watch the whole story unfold.

Shallow layers are skipped gracefully: before any entangling gate
spreads amplitude, the exact distribution is perfectly uniform and
the score's denominator vanishes, so those rows report fidelity only.
"""
import numpy as np

from supeps import (DegenerateDataError, StateVector, apply_layer,
                    apply_layer_to_vector, compute_metrics, exact_fidelity,
                    generate_instance, init_product_state)

N = 16
DEPTH = 20
FLOOR = 2.0 ** -8


def main():
    inst = generate_instance(4, 4, DEPTH, "fsim", seed=5,
                             fsim_angles=(np.pi / 2, np.pi / 6))
    state = init_product_state(inst.lattice, chi_max=16)
    amps = np.zeros(1 << N, dtype=np.complex128)
    amps[0] = 1.0

    print(f"4x4 fsim, chi=16, depth {DEPTH}; nXEB floor 2^-8 = "
          f"{FLOOR:.4e}\n")
    print(f"{'depth':>5} {'F_ex':>11} {'F_nxeb':>11} {'F_apx':>11}  regime")
    sat_scores = []
    for d, layer in enumerate(inst.layers, start=1):
        apply_layer(state, layer, sweeps=2, compute_residual=False)
        amps = apply_layer_to_vector(amps, N, layer)
        psi = StateVector(N, amps)
        f_apx = float(np.exp(state.log_fapx))
        try:
            m = compute_metrics(state, psi)
            f_ex, f_nxeb = m.f_ex, m.f_nxeb
        except DegenerateDataError:
            f_ex, f_nxeb = exact_fidelity(state, psi), None
        if f_nxeb is None:
            regime = "uniform output, score undefined"
        elif f_ex > FLOOR:
            regime = "tracking"
        else:
            regime = "saturated"
            sat_scores.append(f_nxeb)
        score = "-" if f_nxeb is None else f"{f_nxeb:11.4e}"
        print(f"{d:5d} {f_ex:11.4e} {score:>11} {f_apx:11.4e}  {regime}")

    if sat_scores:
        print(f"\nmean F_nxeb past saturation: {np.mean(sat_scores):.4e} "
              f"(floor {FLOOR:.4e}, ratio "
              f"{np.mean(sat_scores) / FLOOR:.2f})")
    print("past the floor the score stops following F_apx down: the")
    print("truncated state keeps residual correlation with the ideal")
    print("distribution at the 2^(-n/2) scale, and the score sits there.")


if __name__ == "__main__":
    main()
