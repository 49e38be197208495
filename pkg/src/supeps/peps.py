"""Vidal-gauge PEPS and its simple-update evolution.

State layout: one degree-5 Gamma tensor per site with legs
("p", "u", "l", "d", "r") in that fixed order (physical, up, left,
down, right; boundary legs have extent 1), and one positive
non-increasing weight vector per lattice edge with its squares summing
to 1. The cumulative fidelity estimate is kept as a natural-log ledger
so it survives values around 2^-n for thousands of qubits.

A two-qubit gate crossing an edge is applied by the simple update:
absorb the environment weights into both Gamma tensors, project each
side onto the bond through a QR split, contract the small degree-4
tensor with the gate, SVD it back apart keeping at most chi values,
record the discarded weight, and divide the environment weights back
out. The same routine without a gate and without truncation is the
gauging pass that restores the Vidal-gauge conditions.
"""

import json
import time

import numpy as np

from .errors import DegenerateInputError, DimensionError, ParameterError
from .tensor import DenseTensor, contract, gram_split, qr_split, scale_leg, svd_truncated

__all__ = [
    "CANONICAL_LEGS",
    "PepsState",
    "FidelityTrace",
    "LayerRecord",
    "init_product_state",
    "apply_single_qubit",
    "simple_update",
    "gauge_sweep",
    "apply_layer",
    "run_circuit",
    "gauge_residual",
    "lambda_spectra",
    "save_state",
    "load_state",
]

CANONICAL_LEGS = ("p", "u", "l", "d", "r")

# a leg's orientation seen from the other end of its edge
_OPPOSITE = {"u": "d", "d": "u", "l": "r", "r": "l"}


class LayerRecord:
    """Per-layer trace entry: discarded weights and state diagnostics."""

    __slots__ = ("index", "set_label", "weights", "log_fapx", "max_bond",
                 "residual", "wall_time")

    def __init__(self, index, set_label, weights, log_fapx, max_bond,
                 residual, wall_time):
        self.index = index
        self.set_label = set_label
        self.weights = weights
        self.log_fapx = log_fapx
        self.max_bond = max_bond
        self.residual = residual
        self.wall_time = wall_time


class FidelityTrace:
    """Accumulated per-layer records of one PEPS evolution."""

    __slots__ = ("records",)

    def __init__(self):
        self.records = []

    def copy(self):
        t = FidelityTrace()
        t.records = list(self.records)
        return t


class PepsState:
    """Vidal-gauge PEPS over a rectangular lattice.

    Fields:
        lattice: the qubit grid and its edges.
        gammas: site -> DenseTensor with legs ("p","u","l","d","r").
        lambdas: edge key (a, b) -> positive non-increasing 1-d array
            with squares summing to 1.
        chi_max: bond-dimension cap enforced by truncating updates.
        log_fapx: natural log of the cumulative fidelity estimate.
        log_scale: natural log of the amplitude factor divided out by
            the per-update weight renormalizations; the represented
            state is exp(log_scale) times the contraction of the
            stored tensors.
        trace: per-layer evolution records.
        svd_cutoff: relative singular-value floor; directions at or
            below cutoff * sigma_max are treated as numerically dead.
        inv_floor: relative floor for environment-weight inversion.
        bond_projection: "qr" (exact isometries) or "gram" (faster,
            isometric only above ~1e-8 relative singular value).
    """

    __slots__ = ("lattice", "gammas", "lambdas", "chi_max", "log_fapx",
                 "log_scale", "trace", "svd_cutoff", "inv_floor",
                 "bond_projection")

    def __init__(self, lattice, gammas, lambdas, chi_max, log_fapx=0.0,
                 log_scale=0.0, trace=None, svd_cutoff=1e-12, inv_floor=1e-12,
                 bond_projection="qr"):
        if bond_projection not in ("qr", "gram"):
            raise ParameterError(f"unknown bond projection {bond_projection!r}")
        self.lattice = lattice
        self.gammas = gammas
        self.lambdas = lambdas
        self.chi_max = chi_max
        self.log_fapx = log_fapx
        self.log_scale = log_scale
        self.trace = trace if trace is not None else FidelityTrace()
        self.svd_cutoff = svd_cutoff
        self.inv_floor = inv_floor
        self.bond_projection = bond_projection

    @property
    def fapx(self):
        return float(np.exp(self.log_fapx))

    def edge_for_leg(self, site, leg):
        """Edge key the virtual leg belongs to, or None on the boundary."""
        r, c = self.lattice.site_coords(site)
        n_r, n_c = self.lattice.n_r, self.lattice.n_c
        if leg == "u":
            return (site - n_c, site) if r > 0 else None
        if leg == "l":
            return (site - 1, site) if c > 0 else None
        if leg == "d":
            return (site, site + n_c) if r + 1 < n_r else None
        if leg == "r":
            return (site, site + 1) if c + 1 < n_c else None
        raise ParameterError(f"not a virtual leg: {leg!r}")

    def bond_weights(self, site, leg):
        """Edge weights on a leg; boundary legs count as weight {1}."""
        key = self.edge_for_leg(site, leg)
        if key is None:
            return None
        return self.lambdas[key]

    def max_bond(self):
        return max(lam.shape[0] for lam in self.lambdas.values())

    def copy(self):
        return PepsState(
            self.lattice,
            {s: g.copy() for s, g in self.gammas.items()},
            {k: lam.copy() for k, lam in self.lambdas.items()},
            self.chi_max,
            log_fapx=self.log_fapx,
            log_scale=self.log_scale,
            trace=self.trace.copy(),
            svd_cutoff=self.svd_cutoff,
            inv_floor=self.inv_floor,
            bond_projection=self.bond_projection,
        )


def init_product_state(lattice, chi_max, svd_cutoff=1e-12, inv_floor=1e-12,
                       bond_projection="qr"):
    """All-zeros product state: every Gamma is delta_{x,0} with unit
    virtual legs, every edge weight vector is {1}."""
    if chi_max < 1:
        raise ParameterError(f"chi_max must be >= 1, got {chi_max}")
    gammas = {}
    for site in range(lattice.n_sites):
        data = np.zeros((2, 1, 1, 1, 1), dtype=np.complex128)
        data[0, 0, 0, 0, 0] = 1.0
        gammas[site] = DenseTensor(data, CANONICAL_LEGS)
    lambdas = {e.key: np.ones(1) for e in lattice.edges}
    return PepsState(lattice, gammas, lambdas, chi_max,
                     svd_cutoff=svd_cutoff, inv_floor=inv_floor,
                     bond_projection=bond_projection)


def apply_single_qubit(state, site, matrix, validate=False):
    """Contract a 2x2 unitary into the site's physical leg in place.

    Weights, bond dimensions and the fidelity ledger are untouched: a
    unitary on a dangling physical leg cannot move any Schmidt weight.
    """
    m = np.asarray(matrix)
    if m.shape != (2, 2):
        raise DimensionError(f"single-qubit gate must be 2x2, got {m.shape}")
    if validate and not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12):
        raise ParameterError("single-qubit gate is not unitary")
    g = state.gammas[site]
    out = np.tensordot(m, g.data, axes=([1], [0]))
    state.gammas[site] = DenseTensor(out, CANONICAL_LEGS)
    return state


def _clipped_reciprocal(lam, floor_rel):
    """1/lam with entries below floor_rel * max zeroed instead of
    amplified; those directions carry no weight worth recovering."""
    floor = floor_rel * lam[0]
    return np.where(lam >= floor, 1.0 / np.where(lam >= floor, lam, 1.0), 0.0)


def _scale_env(t, pairs):
    """Absorb several per-leg weight vectors in a single array pass."""
    cube = None
    for leg, w in pairs:
        shape = [1] * t.data.ndim
        shape[t.axis(leg)] = w.shape[0]
        part = np.asarray(w).reshape(shape)
        cube = part if cube is None else cube * part
    if cube is None:
        return t
    return DenseTensor(t.data * cube, t.legs)


def _project_bond(state, t, env_legs, bond_label):
    """QR factor t = q . r with the environment legs as rows."""
    if state.bond_projection == "gram":
        rows = 1
        for leg in env_legs:
            rows *= t.extent(leg)
        cols = t.data.size // rows
        if rows >= cols:
            return gram_split(t, env_legs, bond=bond_label)
    return qr_split(t, env_legs, bond=bond_label)


def simple_update(state, edge_key, gate=None, truncate=True):
    """One simple-update pass over an edge; returns the discarded weight.

    With a 4x4 ``gate`` (first tensor factor = the lower-numbered site)
    this evolves the state and, when ``truncate``, caps the new bond at
    chi_max; the relative discarded weight w is folded into the
    fidelity ledger as ln(1 - w). With ``gate=None`` this is a gauging
    pass: the contraction is mathematically unchanged, the bond extent
    is kept, and w = 0 by construction.
    """
    key = tuple(edge_key)
    if key not in state.lambdas:
        raise ParameterError(f"{key} is not a lattice edge")
    site_i, site_j = key
    lam_bond = state.lambdas[key]
    leg_i, leg_j = ("r", "l") if site_j == site_i + 1 else ("d", "u")

    env_i = tuple(l for l in ("u", "l", "d", "r") if l != leg_i)
    env_j = tuple(l for l in ("u", "l", "d", "r") if l != leg_j)

    def env_weights(site, legs):
        pairs = []
        for leg in legs:
            w = state.bond_weights(site, leg)
            if w is not None:
                pairs.append((leg, w))
        return pairs

    t_i = _scale_env(state.gammas[site_i], env_weights(site_i, env_i))
    t_j = _scale_env(state.gammas[site_j], env_weights(site_j, env_j))

    q_i, r_i = _project_bond(state, t_i, env_i, "mi")
    q_j, r_j = _project_bond(state, t_j, env_j, "mj")
    # r_i: ("mi", "p", leg_i), r_j: ("mj", "p", leg_j)
    r_i = r_i.rename({"p": "xi"})
    r_j = r_j.rename({"p": "xj"})

    theta = contract(scale_leg(r_i, leg_i, lam_bond), (leg_i,), r_j, (leg_j,))
    # theta: ("mi", "xi", "mj", "xj")
    if gate is not None:
        g = np.asarray(gate)
        if g.shape != (4, 4):
            raise DimensionError(f"two-qubit gate must be 4x4, got {g.shape}")
        gate_t = DenseTensor(g.reshape(2, 2, 2, 2), ("oi", "oj", "xi", "xj"))
        theta = contract(theta, ("xi", "xj"), gate_t, ("xi", "xj"))
        # theta: ("mi", "mj", "oi", "oj")
        row_legs, phys_i, phys_j = ("mi", "oi"), "oi", "oj"
    else:
        row_legs, phys_i, phys_j = ("mi", "xi"), "xi", "xj"

    if gate is None:
        res = svd_truncated(theta, row_legs, max_rank=lam_bond.shape[0],
                            bond="nb", strict_rank=True)
        w = 0.0
    else:
        cap = state.chi_max if truncate else theta.data.size
        res = svd_truncated(theta, row_legs, max_rank=cap,
                            cutoff=state.svd_cutoff, bond="nb")
        w = res.discarded_weight
        state.log_fapx += np.log1p(-w)

    s = res.singular_values
    nrm = float(np.linalg.norm(s))
    if nrm <= 0.0:
        raise DegenerateInputError(f"zero bond weight produced on {key}")
    # restoring the unit-norm weight convention divides the represented
    # amplitudes by nrm; the ledger keeps them recoverable
    state.lambdas[key] = s / nrm
    state.log_scale += np.log(nrm)

    new_i = contract(q_i, ("mi",), res.left_isometry, ("mi",))
    new_j = contract(q_j, ("mj",), res.right_isometry, ("mj",))
    # new_i: (env_i..., phys_i, "nb"); new_j: (env_j..., "nb", phys_j)
    inv = lambda lam: _clipped_reciprocal(lam, state.inv_floor)
    new_i = _scale_env(new_i, [(leg, inv(w)) for leg, w
                               in env_weights(site_i, env_i)])
    new_j = _scale_env(new_j, [(leg, inv(w)) for leg, w
                               in env_weights(site_j, env_j)])
    state.gammas[site_i] = new_i.rename(
        {phys_i: "p", "nb": leg_i}).transpose(CANONICAL_LEGS)
    state.gammas[site_j] = new_j.rename(
        {phys_j: "p", "nb": leg_j}).transpose(CANONICAL_LEGS)
    return w


def gauge_sweep(state, sweeps=1):
    """Gate-free simple-update passes over all edges in reading order.

    Restores the Vidal-gauge conditions without changing the state's
    contraction, bond dimensions or fidelity ledger.
    """
    if sweeps < 0:
        raise ParameterError(f"sweeps must be >= 0, got {sweeps}")
    for _ in range(sweeps):
        for edge in state.lattice.edges:
            simple_update(state, edge.key, gate=None, truncate=False)
    return state


def apply_layer(state, layer, sweeps=2, gauge_after_each_gate=False,
                compute_residual=True):
    """Apply one circuit layer: single-qubit gates on every site, then
    truncating simple updates on the scheduled edges, then gauging.

    Appends a LayerRecord to the state's trace. ``gauge_after_each_gate``
    moves the gauging sweeps inside the two-qubit loop; the default
    gauges once per layer.
    """
    started = time.monotonic()
    for g in layer.single:
        apply_single_qubit(state, g.targets[0], g.matrix)
    weights = []
    for g in layer.double:
        w = simple_update(state, g.targets, g.matrix, truncate=True)
        weights.append((g.targets, w))
        if gauge_after_each_gate:
            gauge_sweep(state, sweeps)
    if not gauge_after_each_gate:
        gauge_sweep(state, sweeps)
    residual = gauge_residual(state) if compute_residual else None
    state.trace.records.append(LayerRecord(
        index=layer.index,
        set_label=layer.set_label,
        weights=tuple(weights),
        log_fapx=state.log_fapx,
        max_bond=state.max_bond(),
        residual=residual,
        wall_time=time.monotonic() - started,
    ))
    return state


def run_circuit(state, instance, sweeps=2, gauge_after_each_gate=False,
                compute_residual=True, progress=None):
    """Evolve the state through every layer of a circuit instance."""
    for layer in instance.layers:
        apply_layer(state, layer, sweeps=sweeps,
                    gauge_after_each_gate=gauge_after_each_gate,
                    compute_residual=compute_residual)
        if progress is not None:
            progress(state, layer)
    return state


def gauge_residual(state):
    """Worst deviation from the Vidal-gauge conditions.

    Maximum over (a) |sum of squared edge weights - 1| per edge, (b)
    the spectral-norm distance from the identity of the one-site
    environment contraction for every site and every excluded leg, and
    (c) |full one-site contraction - 1| per site.
    """
    worst = 0.0
    for lam in state.lambdas.values():
        worst = max(worst, abs(float(np.dot(lam, lam)) - 1.0))
    for site, g in state.gammas.items():
        for excluded in ("u", "l", "d", "r"):
            t = g
            for leg in ("u", "l", "d", "r"):
                if leg == excluded:
                    continue
                lam = state.bond_weights(site, leg)
                if lam is not None:
                    t = scale_leg(t, leg, lam)
            others = tuple(l for l in ("p", "u", "l", "d", "r") if l != excluded)
            m = contract(t.conj().rename({excluded: "x*"}), others, t, others)
            dev = m.data - np.eye(m.data.shape[0])
            worst = max(worst, float(np.linalg.norm(dev, 2)))
        full = g
        for leg in ("u", "l", "d", "r"):
            lam = state.bond_weights(site, leg)
            if lam is not None:
                full = scale_leg(full, leg, lam)
        worst = max(worst, abs(full.norm() ** 2 - 1.0))
    return worst


def lambda_spectra(state):
    """Copies of every edge's weight vector, keyed by the edge pair."""
    return {key: lam.copy() for key, lam in state.lambdas.items()}


def save_state(state, path):
    """Checkpoint all tensors plus the ledger to a .npz file."""
    meta = {
        "n_rows": state.lattice.n_r,
        "n_cols": state.lattice.n_c,
        "chi_max": state.chi_max,
        "log_fapx": state.log_fapx,
        "log_scale": state.log_scale,
        "svd_cutoff": state.svd_cutoff,
        "inv_floor": state.inv_floor,
        "bond_projection": state.bond_projection,
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for site, g in state.gammas.items():
        arrays[f"gamma_{site}"] = g.data
    for (a, b), lam in state.lambdas.items():
        arrays[f"lambda_{a}_{b}"] = lam
    np.savez(path, **arrays)


def load_state(path):
    from .circuits import build_lattice

    with np.load(path) as bundle:
        meta = json.loads(bytes(bundle["meta"]).decode())
        lattice = build_lattice(meta["n_rows"], meta["n_cols"])
        gammas = {
            site: DenseTensor(bundle[f"gamma_{site}"], CANONICAL_LEGS)
            for site in range(lattice.n_sites)
        }
        lambdas = {
            e.key: bundle[f"lambda_{e.key[0]}_{e.key[1]}"]
            for e in lattice.edges
        }
    return PepsState(lattice, gammas, lambdas, meta["chi_max"],
                     log_fapx=meta["log_fapx"],
                     log_scale=meta["log_scale"],
                     svd_cutoff=meta["svd_cutoff"],
                     inv_floor=meta["inv_floor"],
                     bond_projection=meta["bond_projection"])
