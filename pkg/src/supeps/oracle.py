"""Exact brute-force reference: state-vector circuit simulation, full
PEPS contraction, fidelity, normalized XEB, Porter-Thomas and
entanglement diagnostics.

Bitstring convention: sites in English reading order with site 0 the
most significant bit of the amplitude index, fixed across the package.
"""

import numpy as np
import scipy.stats

from .errors import (
    DegenerateDataError,
    DegenerateInputError,
    DimensionError,
    ResourceError,
)
from .tensor import DenseTensor, contract, scale_leg

__all__ = [
    "StateVector",
    "OracleMetrics",
    "statevector_run",
    "apply_layer_to_vector",
    "peps_to_statevector",
    "peps_norm",
    "peps_overlap",
    "exact_fidelity",
    "bitstring_probabilities",
    "nxeb",
    "ptd_distance",
    "entanglement_entropy",
    "entropy_profile",
    "operator_schmidt",
    "compute_metrics",
]

DEFAULT_QUBIT_CAP = 25
DEFAULT_MEM_CAP = 2_000_000_000
DEFAULT_CHUNK = 134_217_728

_BYTES = 16  # complex128


class StateVector:
    """Exact n-qubit state: 2^n amplitudes, reading-order bit layout."""

    __slots__ = ("n", "amplitudes")

    def __init__(self, n, amplitudes):
        self.n = n
        self.amplitudes = amplitudes

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


def _apply_single(amps, n, site, m):
    left = 1 << site
    right = 1 << (n - site - 1)
    a = amps.reshape(left, 2, right)
    return np.einsum("xy,ayb->axb", m, a).reshape(-1)


def _apply_double(amps, n, site_a, site_b, m4):
    left = 1 << site_a
    mid = 1 << (site_b - site_a - 1)
    right = 1 << (n - site_b - 1)
    a = amps.reshape(left, 2, mid, 2, right)
    g = m4.reshape(2, 2, 2, 2)  # indices: out_a, out_b, in_a, in_b
    return np.einsum("wxyz,aybzc->awbxc", g, a).reshape(-1)


def apply_layer_to_vector(amps, n, layer):
    """All gates of one circuit layer applied to an amplitude array."""
    for g in layer.single:
        amps = _apply_single(amps, n, g.targets[0], g.matrix)
    for g in layer.double:
        amps = _apply_double(amps, n, g.targets[0], g.targets[1], g.matrix)
    return amps


def statevector_run(instance, cap_qubits=DEFAULT_QUBIT_CAP):
    """Evolve |0...0> through every layer of the instance exactly."""
    n = instance.lattice.n_sites
    if n > cap_qubits:
        raise ResourceError(
            f"{n} qubits exceed the state-vector cap of {cap_qubits}",
            required=(1 << n) * _BYTES,
            cap=(1 << cap_qubits) * _BYTES,
        )
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    for layer in instance.layers:
        amps = apply_layer_to_vector(amps, n, layer)
    return StateVector(n, amps)


def _site_tensor(state, site):
    """Gamma with sqrt of each edge weight absorbed symmetrically."""
    g = state.gammas[site]
    for leg in ("u", "l", "d", "r"):
        lam = state.bond_weights(site, leg)
        if lam is not None:
            g = scale_leg(g, leg, np.sqrt(lam))
    return g


def _drop_unit(t, leg):
    ax = t.axis(leg)
    return DenseTensor(np.squeeze(t.data, axis=ax),
                       t.legs[:ax] + t.legs[ax + 1:])


def _column_per_x_peak(bond_extents, col_dims, attach):
    """Largest per-x-element transient (in tensor entries) while one
    column is absorbed into a wall, mirroring _absorb_column."""
    n_r = len(col_dims)
    acc = 1
    peak = 1
    for i in range(n_r):
        _, u, l, d, r = col_dims[i]
        open_ext = r if attach == "l" else l
        acc *= 2 * open_ext
        rem = 1
        for j in range(i + 1, n_r):
            rem *= bond_extents[j]
        peak = max(peak, acc * d * rem)
    return peak, acc


def _column_chunks(wall, tensors, attach, chunk_bytes):
    """Absorb one lattice column into a wall, yielding the result in
    x-chunks of roughly chunk_bytes.

    wall legs: ("x", "b0", ..). Each bond leg "bi" is contracted with
    row i's ``attach`` leg ("l" extending rightward, "r" leftward); the
    row tensors chain vertically through their u/d legs. Physical legs
    are folded into x (appended as less significant bits), and the
    opposite-side legs become the new bonds. Yields (row0, block) pairs
    where block has shape (rows,) + out_bonds and row0 is its offset
    along the new x axis.
    """
    n_r = len(tensors)
    open_leg = "r" if attach == "l" else "l"
    bond_extents = [wall.extent(f"b{i}") for i in range(n_r)]
    col_dims = [t.dims for t in tensors]
    per_x, _ = _column_per_x_peak(bond_extents, col_dims, attach)
    x_ext = wall.extent("x")
    chunk = max(1, int(chunk_bytes // (3 * per_x * _BYTES)))

    out_bonds = tuple(t.extent(open_leg) for t in tensors)
    phys_legs = tuple(f"p{i}" for i in range(n_r))
    open_legs = tuple(f"o{i}" for i in range(n_r))
    wall_x_axis = wall.axis("x")
    for x0 in range(0, x_ext, chunk):
        x1 = min(x0 + chunk, x_ext)
        cur = DenseTensor(np.take(wall.data, range(x0, x1), axis=wall_x_axis),
                          wall.legs)
        for i, t in enumerate(tensors):
            a = t.rename({"p": f"p{i}", open_leg: f"o{i}"})
            if i == 0:
                cur = contract(cur, (f"b{i}",), a, (attach,))
                cur = _drop_unit(cur, "u")
            else:
                cur = contract(cur, (f"b{i}", "d"), a, (attach, "u"))
        cur = _drop_unit(cur, "d")
        cur = cur.transpose(("x",) + phys_legs + open_legs)
        block = cur.data.reshape(((x1 - x0) * (1 << n_r),) + out_bonds)
        yield x0 * (1 << n_r), block


def _absorb_column(wall, tensors, attach, chunk_bytes):
    """Extend a wall tensor by one lattice column (materialized)."""
    n_r = len(tensors)
    open_leg = "r" if attach == "l" else "l"
    out_bonds = tuple(t.extent(open_leg) for t in tensors)
    x_ext = wall.extent("x")
    out = np.empty((x_ext * (1 << n_r),) + out_bonds, dtype=np.complex128)
    for row0, block in _column_chunks(wall, tensors, attach, chunk_bytes):
        out[row0:row0 + block.shape[0]] = block
    legs = ("x",) + tuple(f"b{i}" for i in range(n_r))
    return DenseTensor(out, legs)


def _contraction_plan(state, chunk_bytes=DEFAULT_CHUNK):
    """Cut position and a conservative peak memory estimate (bytes) for
    the full contraction.

    The last absorbed column (the right wall's landing on the cut) is
    streamed straight into the amplitude tensor, so its full wall never
    exists; the peak there is left wall + previous right wall + result
    + chunk transients.
    """
    n_r, n_c = state.lattice.n_r, state.lattice.n_c
    cut = n_c // 2
    dims = {s: state.gammas[s].dims for s in range(n_r * n_c)}

    def site(r, c):
        return r * n_c + c

    def transients(per_x):
        chunk = max(1, int(chunk_bytes // (3 * per_x * _BYTES)))
        return 3 * chunk * per_x * _BYTES

    peak = 0
    left_bytes = 0
    wall_bytes = 0
    final_per_x = 1
    for attach, cols in (("l", range(cut)), ("r", range(n_c - 1, cut - 1, -1))):
        x_ext = 1
        bonds = [1] * n_r
        wall_bytes = x_ext * _BYTES
        for c in cols:
            col_dims = [dims[site(r, c)] for r in range(n_r)]
            per_x, acc = _column_per_x_peak(bonds, col_dims, attach)
            bonds_out = [d[4] if attach == "l" else d[2] for d in col_dims]
            last = attach == "r" and c == cut
            if last:
                final_per_x = per_x
            else:
                # acc already counts the physical and open-bond factors
                out_entries = x_ext * acc
                peak = max(peak, left_bytes + wall_bytes +
                           out_entries * _BYTES + transients(per_x))
                wall_bytes = out_entries * _BYTES
            x_ext *= 1 << n_r
            bonds = bonds_out
        if attach == "l":
            left_bytes = wall_bytes
    full = (1 << (n_r * n_c)) * _BYTES
    peak = max(peak,
               left_bytes + wall_bytes + full + transients(final_per_x),
               2 * full)
    return cut, peak


def peps_to_statevector(state, mem_cap_bytes=DEFAULT_MEM_CAP,
                        chunk_bytes=DEFAULT_CHUNK):
    """Materialize the full 2^n amplitude vector of the PEPS.

    Two walls are built by absorbing columns from the left and the
    right edges of the lattice; they meet at a vertical cut near the
    middle, where a single matrix product over the cut bonds produces
    the amplitude tensor. Before any allocation the full sweep is
    walked symbolically; if the conservative peak-memory estimate
    exceeds ``mem_cap_bytes`` a ResourceError carrying that estimate is
    raised instead of thrashing.
    """
    lattice = state.lattice
    n_r, n_c = lattice.n_r, lattice.n_c
    n = n_r * n_c
    cut, required = _contraction_plan(state, chunk_bytes)
    if required > mem_cap_bytes:
        raise ResourceError(
            f"contraction needs about {required:.3e} bytes, cap is "
            f"{mem_cap_bytes:.3e}",
            required=required,
            cap=mem_cap_bytes,
        )

    def wall_for(cols, attach):
        wall = DenseTensor(
            np.ones((1,) * (n_r + 1), dtype=np.complex128),
            ("x",) + tuple(f"b{i}" for i in range(n_r)),
        )
        sites = []
        for c in cols:
            tensors = [_site_tensor(state, lattice.site_index(r, c))
                       for r in range(n_r)]
            wall = _absorb_column(wall, tensors, attach, chunk_bytes)
            sites.extend((r, c) for r in range(n_r))
        return wall, sites

    left, left_sites = wall_for(range(cut), "l")
    right, right_sites = wall_for(range(n_c - 1, cut, -1), "r")
    right_sites.extend((r, cut) for r in range(n_r))

    # the landing column is streamed chunk by chunk into the amplitude
    # tensor, so the full right wall is never materialized
    axes = list(range(1, n_r + 1))
    x_left = left.extent("x")
    x_right = right.extent("x") * (1 << n_r)
    merged = np.empty((x_left, x_right), dtype=np.complex128)
    tensors = [_site_tensor(state, lattice.site_index(r, cut))
               for r in range(n_r)]
    for row0, block in _column_chunks(right, tensors, "r", chunk_bytes):
        slab = np.tensordot(left.data, block, axes=(axes, axes))
        merged[:, row0:row0 + block.shape[0]] = slab.reshape(x_left, -1)
    del left, right, block, slab

    site_order = [r * n_c + c for r, c in left_sites + right_sites]
    perm = [site_order.index(s) for s in range(n)]
    vec = merged.reshape((2,) * n).transpose(perm).reshape(-1)
    if state.log_scale != 0.0:
        vec = vec * np.exp(state.log_scale)
    return vec


def peps_norm(state, **kwargs):
    vec = peps_to_statevector(state, **kwargs)
    return float(np.linalg.norm(vec))


def peps_overlap(state, psi, peps_vector=None, **kwargs):
    """<psi | PEPS> with no normalization of either side."""
    if peps_vector is None:
        peps_vector = peps_to_statevector(state, **kwargs)
    return complex(np.vdot(psi.amplitudes, peps_vector))


def exact_fidelity(state, psi, peps_vector=None, **kwargs):
    """|<psi|PEPS>|^2 / (|psi|^2 |PEPS|^2)."""
    if peps_vector is None:
        peps_vector = peps_to_statevector(state, **kwargs)
    ov = np.vdot(psi.amplitudes, peps_vector)
    na = np.vdot(psi.amplitudes, psi.amplitudes).real
    nb = np.vdot(peps_vector, peps_vector).real
    return float(np.abs(ov) ** 2 / (na * nb))


def bitstring_probabilities(amplitudes):
    """|amplitude|^2 table, normalized to sum to 1."""
    p = np.abs(np.asarray(amplitudes)) ** 2
    return p / p.sum()


def nxeb(p_peps, p_ex):
    """Normalized cross-entropy benchmark between two probability
    tables: (2^n sum p_peps * p_ex - 1) / (2^n sum p_ex^2 - 1).

    Both tables are normalized before use (the PEPS is not norm-1
    after truncation). A uniform exact table makes the denominator
    vanish and is rejected.
    """
    p = np.asarray(p_peps, dtype=np.float64)
    q = np.asarray(p_ex, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionError(
            f"probability tables must be equal-length vectors, got "
            f"{p.shape} and {q.shape}"
        )
    size = p.shape[0]
    if size & (size - 1):
        raise DimensionError(f"table length {size} is not a power of 2")
    p = p / p.sum()
    q = q / q.sum()
    den = size * float(np.dot(q, q)) - 1.0
    if abs(den) < 1e-12:
        raise DegenerateDataError("exact distribution is uniform")
    num = size * float(np.dot(p, q)) - 1.0
    return num / den


def ptd_distance(p):
    """Kolmogorov-Smirnov statistic between the rescaled probabilities
    {2^n p(x)} and the unit exponential (Porter-Thomas) distribution."""
    p = np.asarray(p, dtype=np.float64)
    p = p / p.sum()
    vals = p.size * p
    return float(scipy.stats.kstest(vals, "expon").statistic)


def entanglement_entropy(psi, cut):
    """Bipartite entropy (bits) across reading-order sites
    {0..cut-1} | {cut..n-1}, plus the Schmidt spectrum."""
    if not 1 <= cut < psi.n:
        raise DimensionError(f"cut must lie in [1, {psi.n - 1}], got {cut}")
    m = psi.amplitudes.reshape(1 << cut, -1)
    s = np.linalg.svd(m, compute_uv=False)
    total = float(np.dot(s, s))
    probs = (s * s) / total
    probs = probs[probs > 0]
    return float(-np.dot(probs, np.log2(probs))), s


def entropy_profile(psi):
    """S_i in bits for every cut i = 1 .. n-1."""
    return [entanglement_entropy(psi, i)[0] for i in range(1, psi.n)]


def operator_schmidt(gate):
    """Operator Schmidt coefficients of a two-qubit gate, sorted
    non-increasing and rescaled by the largest; zero coefficients
    (below 1e-12 of the largest) are dropped."""
    g = np.asarray(gate, dtype=np.complex128)
    if g.shape != (4, 4):
        raise DimensionError(f"expected a 4x4 matrix, got {g.shape}")
    if not np.any(g):
        raise DegenerateInputError("operator Schmidt of the zero matrix")
    r = g.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    s = np.linalg.svd(r, compute_uv=False)
    s = s[s > 1e-12 * s[0]]
    return s / s[0]


class OracleMetrics:
    """Per-checkpoint oracle measurements of one PEPS state."""

    __slots__ = ("f_ex", "f_nxeb", "ptd_peps", "ptd_exact",
                 "entropy_profile", "spectra")

    def __init__(self, f_ex, f_nxeb, ptd_peps, ptd_exact,
                 entropy_profile=None, spectra=None):
        self.f_ex = f_ex
        self.f_nxeb = f_nxeb
        self.ptd_peps = ptd_peps
        self.ptd_exact = ptd_exact
        self.entropy_profile = entropy_profile
        self.spectra = spectra


def compute_metrics(state, psi, include_entropy=False,
                    mem_cap_bytes=DEFAULT_MEM_CAP,
                    chunk_bytes=DEFAULT_CHUNK):
    """Fidelity, nXEB and Porter-Thomas diagnostics of the PEPS against
    an exact state, reusing one full contraction."""
    vec = peps_to_statevector(state, mem_cap_bytes=mem_cap_bytes,
                              chunk_bytes=chunk_bytes)
    f_ex = exact_fidelity(state, psi, peps_vector=vec)
    p_peps = bitstring_probabilities(vec)
    p_ex = bitstring_probabilities(psi.amplitudes)
    f_nxeb = nxeb(p_peps, p_ex)
    profile = None
    spectra = None
    if include_entropy:
        profile = entropy_profile(psi)
        spectra = [entanglement_entropy(psi, i)[1] for i in range(1, psi.n)]
    return OracleMetrics(
        f_ex=f_ex,
        f_nxeb=f_nxeb,
        ptd_peps=ptd_distance(p_peps),
        ptd_exact=ptd_distance(p_ex),
        entropy_profile=profile,
        spectra=spectra,
    )
