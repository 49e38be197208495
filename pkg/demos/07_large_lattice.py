#!/usr/bin/env python3
"""Where tensor networks beat state vectors: a 2500-qubit circuit.

A 50x50 lattice is hopeless for any exact method (the vector would
need 2^2500 amplitudes) but the simple update walks through it with
memory linear in the qubit count. The per-layer fidelity estimate
keeps falling smoothly in the log domain; nothing overflows and
nothing is ever materialized beyond one tensor per site.
"""
import resource
import time

import numpy as np

from supeps import apply_layer, cost_estimate, generate_instance, \
    init_product_state

ROWS = COLS = 50
CHI = 8
DEPTH = 8


def main():
    flops, mem = cost_estimate(ROWS, COLS, CHI, DEPTH)
    print(f"{ROWS}x{COLS} lattice ({ROWS * COLS} qubits), 2HR gates, "
          f"chi={CHI}, depth {DEPTH}")
    print(f"leading-order estimates: {flops:.1e} flops, "
          f"{mem * 16 / 1e6:.0f} MB of tensors\n")

    inst = generate_instance(ROWS, COLS, DEPTH, "haar", seed=1)
    state = init_product_state(inst.lattice, chi_max=CHI,
                               bond_projection="gram")
    t0 = time.monotonic()
    for layer in inst.layers:
        apply_layer(state, layer, sweeps=2, compute_residual=False)
        dt = time.monotonic() - t0
        print(f"  layer {layer.index:2d} set {layer.set_label}  "
              f"ln F_apx = {state.log_fapx:10.3f}   ({dt:5.1f}s)")

    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1e6
    print(f"\nln F_apx = {state.log_fapx:.2f} "
          f"(F_apx ~ 10^{state.log_fapx / np.log(10):.0f})")
    print(f"peak memory {rss:.2f} GB, total {time.monotonic() - t0:.1f}s")
    print("the estimate stays finite and well-ordered in the log domain")
    print("even where F itself underflows any float.")


if __name__ == "__main__":
    main()
