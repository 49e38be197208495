"""Qubit lattice, brickwork gate schedule, gate library and seeded
circuit-instance generation.

Sites on an n_r x n_c grid are numbered in English reading order,
site = row * n_c + col. Edges connect nearest neighbors and are listed
in reading order as well: the horizontal edges of row r left to right,
then the vertical edges between rows r and r+1 left to right, then row
r+1, and so on. Each edge belongs to one of four disjoint sets:

    horizontal (r,c)-(r,c+1): A if r+c even, else B
    vertical   (r,c)-(r+1,c): C if r+c even, else D

Layer t (1-based) applies single-qubit gates everywhere and two-qubit
gates on the set given by the period-8 pattern ABCDCDAB, so every edge
receives exactly two gates per period.
"""

import json

import numpy as np

from .errors import ParameterError, SizeError

__all__ = [
    "SQRT_X",
    "SQRT_Y",
    "SQRT_W",
    "SINGLE_QUBIT_GATES",
    "LAYER_PATTERN",
    "Edge",
    "Lattice",
    "GateSpec",
    "Layer",
    "CircuitInstance",
    "build_lattice",
    "scheduled_set",
    "fsim_matrix",
    "cz_matrix",
    "haar_unitary4",
    "generate_instance",
    "scheduled_gate_count",
    "instance_to_json",
    "instance_from_json",
    "save_instance",
    "load_instance",
]

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

SQRT_X = _INV_SQRT2 * np.array([[1.0, -1.0j], [-1.0j, 1.0]])
SQRT_Y = _INV_SQRT2 * np.array([[1.0, -1.0], [1.0, 1.0]])
SQRT_W = _INV_SQRT2 * np.array(
    [[1.0, -np.exp(0.25j * np.pi)], [np.exp(-0.25j * np.pi), 1.0]]
)

SINGLE_QUBIT_GATES = {"sqrt_x": SQRT_X, "sqrt_y": SQRT_Y, "sqrt_w": SQRT_W}
_SINGLE_KINDS = ("sqrt_x", "sqrt_y", "sqrt_w")

LAYER_PATTERN = "ABCDCDAB"

# stream tags keep single- and two-qubit draws on disjoint counter lanes
_TAG_SINGLE = 0
_TAG_DOUBLE = 1


def fsim_matrix(theta, phi):
    """4x4 fSim(theta, phi) unitary in the {00, 01, 10, 11} basis.

    theta is the iSWAP-like angle in [0, pi/2], phi the controlled-phase
    angle in [0, pi].
    """
    if not 0.0 <= theta <= np.pi / 2:
        raise ParameterError(f"theta must lie in [0, pi/2], got {theta}")
    if not 0.0 <= phi <= np.pi:
        raise ParameterError(f"phi must lie in [0, pi], got {phi}")
    # exact entries at the corner angles: float trig leaves cos(pi/2)
    # and exp(-i pi) a rounding error away from the true gate
    c = 0.0 if theta == np.pi / 2 else np.cos(theta)
    s = 1.0 if theta == np.pi / 2 else np.sin(theta)
    if phi == np.pi:
        phase = -1.0 + 0.0j
    else:
        phase = np.exp(-1.0j * phi)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, -1.0j * s, 0.0],
            [0.0, -1.0j * s, c, 0.0],
            [0.0, 0.0, 0.0, phase],
        ]
    )


def cz_matrix():
    return fsim_matrix(0.0, np.pi)


def haar_unitary4(gen):
    """Haar-distributed 4x4 unitary: QR of a complex Gaussian matrix
    with the R-diagonal phase folded into Q."""
    z = gen.standard_normal((4, 4)) + 1.0j * gen.standard_normal((4, 4))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[np.newaxis, :]


class Edge:
    """Lattice edge: ordered site pair (a < b) plus its schedule set."""

    __slots__ = ("site_a", "site_b", "set_label")

    def __init__(self, site_a, site_b, set_label):
        self.site_a = site_a
        self.site_b = site_b
        self.set_label = set_label

    @property
    def key(self):
        return (self.site_a, self.site_b)

    def __repr__(self):
        return f"Edge({self.site_a}, {self.site_b}, {self.set_label})"


class Lattice:
    """Rectangular qubit grid with its reading-order edge list."""

    __slots__ = ("n_r", "n_c", "edges")

    def __init__(self, n_r, n_c, edges):
        self.n_r = n_r
        self.n_c = n_c
        self.edges = edges

    @property
    def n_sites(self):
        return self.n_r * self.n_c

    def site_index(self, r, c):
        return r * self.n_c + c

    def site_coords(self, site):
        return divmod(site, self.n_c)

    def edges_in_set(self, label):
        return tuple(e for e in self.edges if e.set_label == label)

    def edge_legs(self, edge):
        """Virtual-leg names the edge occupies on (site_a, site_b)."""
        if edge.site_b == edge.site_a + 1:
            return ("r", "l")
        return ("d", "u")

    def __repr__(self):
        return f"Lattice({self.n_r}x{self.n_c}, {len(self.edges)} edges)"


def build_lattice(n_r, n_c):
    if n_r < 2 or n_c < 2:
        raise SizeError(f"lattice must be at least 2x2, got {n_r}x{n_c}")
    edges = []
    for r in range(n_r):
        for c in range(n_c - 1):
            label = "A" if (r + c) % 2 == 0 else "B"
            edges.append(Edge(r * n_c + c, r * n_c + c + 1, label))
        if r < n_r - 1:
            for c in range(n_c):
                label = "C" if (r + c) % 2 == 0 else "D"
                edges.append(Edge(r * n_c + c, (r + 1) * n_c + c, label))
    return Lattice(n_r, n_c, tuple(edges))


def scheduled_set(t):
    """Set label receiving two-qubit gates in layer t (1-based)."""
    if t < 1:
        raise ParameterError(f"layer index must be >= 1, got {t}")
    return LAYER_PATTERN[(t - 1) % 8]


class GateSpec:
    """One concrete gate: kind tag, target site(s) and unitary matrix.

    kind is one of sqrt_x / sqrt_y / sqrt_w (single-qubit) or cz / fsim
    / haar4 (two-qubit); params holds the fSim angles when kind is fsim.
    """

    __slots__ = ("kind", "targets", "params", "matrix")

    def __init__(self, kind, targets, matrix, params=None):
        self.kind = kind
        self.targets = tuple(targets)
        self.params = params
        self.matrix = matrix

    def __repr__(self):
        return f"GateSpec({self.kind}, targets={self.targets})"


class Layer:
    """One circuit layer: a single-qubit gate per site followed by
    two-qubit gates on the scheduled edge set."""

    __slots__ = ("index", "set_label", "single", "double")

    def __init__(self, index, set_label, single, double):
        self.index = index
        self.set_label = set_label
        self.single = single
        self.double = double


class CircuitInstance:
    """Fully materialized, seeded gate program."""

    __slots__ = ("lattice", "depth", "sequence_kind", "fsim_angles", "seed",
                 "layers")

    def __init__(self, lattice, depth, sequence_kind, fsim_angles, seed,
                 layers):
        self.lattice = lattice
        self.depth = depth
        self.sequence_kind = sequence_kind
        self.fsim_angles = fsim_angles
        self.seed = seed
        self.layers = layers


def _stream(seed, tag, layer, entity):
    """Counter-based generator for one (layer, site-or-edge) draw, so
    instance content is independent of generation order."""
    bits = np.random.Philox(
        key=np.array([seed, tag], dtype=np.uint64),
        counter=np.array([layer, entity, 0, 0], dtype=np.uint64),
    )
    return np.random.Generator(bits)


def generate_instance(n_r, n_c, depth, sequence_kind, seed, fsim_angles=None):
    """Build the seeded circuit: per layer, i.i.d. uniform single-qubit
    gates from {sqrt X, sqrt Y, sqrt W} on every site, and two-qubit
    gates of the requested family on the scheduled edge set.

    sequence_kind is "cz", "fsim" (fsim_angles required) or "haar".
    Deterministic in seed; depth 0 yields an empty layer list.
    """
    if depth < 0:
        raise ParameterError(f"depth must be >= 0, got {depth}")
    if sequence_kind not in ("cz", "fsim", "haar"):
        raise ParameterError(f"unknown sequence kind {sequence_kind!r}")
    if sequence_kind == "fsim":
        if fsim_angles is None:
            raise ParameterError("fsim sequence requires fsim_angles")
        theta, phi = float(fsim_angles[0]), float(fsim_angles[1])
        fixed_two = fsim_matrix(theta, phi)
        angles = (theta, phi)
    elif sequence_kind == "cz":
        fixed_two = cz_matrix()
        angles = None
    else:
        fixed_two = None
        angles = None

    lattice = build_lattice(n_r, n_c)
    layers = []
    for t in range(1, depth + 1):
        single = []
        for site in range(lattice.n_sites):
            gen = _stream(seed, _TAG_SINGLE, t, site)
            kind = _SINGLE_KINDS[gen.integers(3)]
            single.append(GateSpec(kind, (site,), SINGLE_QUBIT_GATES[kind]))
        label = scheduled_set(t)
        double = []
        for edge_index, edge in enumerate(lattice.edges):
            if edge.set_label != label:
                continue
            if sequence_kind == "haar":
                gen = _stream(seed, _TAG_DOUBLE, t, edge_index)
                spec = GateSpec("haar4", edge.key, haar_unitary4(gen))
            elif sequence_kind == "fsim":
                spec = GateSpec("fsim", edge.key, fixed_two, params=angles)
            else:
                spec = GateSpec("cz", edge.key, fixed_two)
            double.append(spec)
        layers.append(Layer(t, label, tuple(single), tuple(double)))
    return CircuitInstance(lattice, depth, sequence_kind, angles, seed,
                           tuple(layers))


def scheduled_gate_count(lattice, depth):
    """Exact number of two-qubit gates applied through `depth` layers."""
    per_set = {s: len(lattice.edges_in_set(s)) for s in "ABCD"}
    return sum(per_set[scheduled_set(t)] for t in range(1, depth + 1))


def instance_to_json(instance):
    """Serialize to a canonical JSON string (sorted keys, 2-space
    indent). Gate matrices are stored only for the haar family; all
    other gates are reconstructed from their kind and parameters, and
    floats use the shortest exact decimal representation, so the
    round-trip is lossless and byte-stable."""
    doc = {
        "format": "rqc-instance",
        "version": 1,
        "n_rows": instance.lattice.n_r,
        "n_cols": instance.lattice.n_c,
        "depth": instance.depth,
        "sequence_kind": instance.sequence_kind,
        "seed": instance.seed,
    }
    if instance.sequence_kind == "fsim":
        doc["fsim_theta"] = instance.fsim_angles[0]
        doc["fsim_phi"] = instance.fsim_angles[1]
    layers = []
    for layer in instance.layers:
        entry = {
            "layer": layer.index,
            "set": layer.set_label,
            "single": [g.kind for g in layer.single],
            "edges": [list(g.targets) for g in layer.double],
        }
        if instance.sequence_kind == "haar":
            entry["haar_matrices"] = [
                {
                    "re": g.matrix.real.tolist(),
                    "im": g.matrix.imag.tolist(),
                }
                for g in layer.double
            ]
        layers.append(entry)
    doc["layers"] = layers
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def instance_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != "rqc-instance" or doc.get("version") != 1:
        raise ParameterError("not a version-1 circuit instance document")
    kind = doc["sequence_kind"]
    lattice = build_lattice(doc["n_rows"], doc["n_cols"])
    edge_by_key = {e.key: e for e in lattice.edges}
    if kind == "fsim":
        angles = (doc["fsim_theta"], doc["fsim_phi"])
        fixed_two = fsim_matrix(*angles)
    elif kind == "cz":
        angles = None
        fixed_two = cz_matrix()
    else:
        angles = None
        fixed_two = None
    layers = []
    for entry in doc["layers"]:
        single = tuple(
            GateSpec(k, (site,), SINGLE_QUBIT_GATES[k])
            for site, k in enumerate(entry["single"])
        )
        double = []
        for pos, pair in enumerate(entry["edges"]):
            key = tuple(pair)
            if key not in edge_by_key:
                raise ParameterError(f"edge {key} not on the lattice")
            if kind == "haar":
                m = entry["haar_matrices"][pos]
                matrix = np.array(m["re"]) + 1.0j * np.array(m["im"])
                double.append(GateSpec("haar4", key, matrix))
            elif kind == "fsim":
                double.append(GateSpec("fsim", key, fixed_two, params=angles))
            else:
                double.append(GateSpec("cz", key, fixed_two))
        layers.append(Layer(entry["layer"], entry["set"], single,
                            tuple(double)))
    return CircuitInstance(lattice, doc["depth"], kind, angles, doc["seed"],
                           tuple(layers))


def save_instance(instance, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(instance_to_json(instance))


def load_instance(path):
    with open(path, encoding="utf-8") as f:
        return instance_from_json(f.read())
