#!/usr/bin/env python3
"""Exact regime: with the bond dimension large enough to hold every
Schmidt coefficient, the simple update is not an approximation at all.

A 3x3 lattice run to depth 6 keeps every bond at or below 16, so
chi=16 loses nothing. The evolved tensor network and a brute-force
state vector of the same circuit then agree to machine precision,
which is the cleanest end-to-end check the package has: two
independent code paths, one number.
"""
import time

import numpy as np

from supeps import (apply_layer, exact_fidelity, generate_instance,
                    init_product_state, statevector_run)


def main():
    inst = generate_instance(3, 3, 6, "fsim", seed=7,
                             fsim_angles=(np.pi / 2, np.pi / 6))
    print(f"circuit: 3x3 fsim(pi/2, pi/6), depth 6, seed 7")

    t0 = time.monotonic()
    state = init_product_state(inst.lattice, chi_max=16)
    for layer in inst.layers:
        apply_layer(state, layer, sweeps=2)
        rec = state.trace.records[-1]
        print(f"  layer {rec.index:2d} set {rec.set_label}  "
              f"max bond {rec.max_bond:2d}  "
              f"gauge residual {rec.residual:.2e}")
    t_peps = time.monotonic() - t0

    t0 = time.monotonic()
    psi = statevector_run(inst)
    t_exact = time.monotonic() - t0

    f = exact_fidelity(state, psi)
    w_total = sum(sum(w for _, w in rec.weights)
                  for rec in state.trace.records)
    print(f"\ntotal discarded weight: {w_total:.3e}")
    print(f"estimated fidelity F_apx: {np.exp(state.log_fapx):.15f}")
    print(f"exact fidelity    F_ex:   {f:.15f}")
    print(f"1 - F_ex = {1.0 - f:.3e}  (machine precision)")
    print(f"network evolution {t_peps:.2f}s, state vector {t_exact:.2f}s")


if __name__ == "__main__":
    main()
