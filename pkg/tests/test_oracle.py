"""State-vector oracle, full PEPS contraction, and the derived metrics."""

import numpy as np
import pytest

from supeps.circuits import (
    GateSpec,
    Layer,
    build_lattice,
    cz_matrix,
    fsim_matrix,
    generate_instance,
    haar_unitary4,
)
from supeps.errors import (
    DegenerateDataError,
    DegenerateInputError,
    DimensionError,
    ResourceError,
)
from supeps.oracle import (
    StateVector,
    apply_layer_to_vector,
    bitstring_probabilities,
    compute_metrics,
    entanglement_entropy,
    entropy_profile,
    exact_fidelity,
    nxeb,
    operator_schmidt,
    peps_overlap,
    peps_to_statevector,
    ptd_distance,
    statevector_run,
)
from supeps.peps import CANONICAL_LEGS, PepsState, init_product_state
from supeps.tensor import DenseTensor

X = np.array([[0, 1], [1, 0]], dtype=complex)


def single_layer(n, gates):
    return Layer(index=1, set_label="A",
                 single=tuple(GateSpec("custom", (s,), m) for s, m in gates),
                 double=())


def double_layer(gates):
    return Layer(index=1, set_label="A", single=(),
                 double=tuple(GateSpec("custom", t, m) for t, m in gates))


def basis_vector(n, index):
    v = np.zeros(1 << n, dtype=complex)
    v[index] = 1.0
    return v


class TestStatevectorGates:
    def test_depth_zero_is_all_zeros_ket(self):
        inst = generate_instance(2, 2, 0, "cz", seed=1)
        psi = statevector_run(inst)
        assert psi.n == 4
        np.testing.assert_array_equal(psi.amplitudes, basis_vector(4, 0))

    def test_site_zero_is_most_significant_bit(self):
        amps = apply_layer_to_vector(basis_vector(2, 0), 2,
                                     single_layer(2, [(0, X)]))
        np.testing.assert_allclose(amps, basis_vector(2, 2), atol=1e-15)

    def test_last_site_is_least_significant_bit(self):
        amps = apply_layer_to_vector(basis_vector(2, 0), 2,
                                     single_layer(2, [(1, X)]))
        np.testing.assert_allclose(amps, basis_vector(2, 1), atol=1e-15)

    def test_cz_phases_only_the_11_component(self):
        layer = double_layer([((0, 1), cz_matrix())])
        for idx in range(4):
            amps = apply_layer_to_vector(basis_vector(2, idx), 2, layer)
            want = basis_vector(2, idx) * (-1 if idx == 3 else 1)
            np.testing.assert_allclose(amps, want, atol=1e-15)

    def test_iswap_like_corner_moves_01_to_10(self):
        layer = double_layer([((0, 1), fsim_matrix(np.pi / 2, np.pi))])
        amps = apply_layer_to_vector(basis_vector(2, 1), 2, layer)
        np.testing.assert_allclose(amps, -1j * basis_vector(2, 2), atol=1e-15)

    def test_two_qubit_gate_on_non_adjacent_sites(self):
        layer = double_layer([((0, 2), cz_matrix())])
        amps = apply_layer_to_vector(basis_vector(3, 0b101), 3, layer)
        np.testing.assert_allclose(amps, -basis_vector(3, 0b101), atol=1e-15)

    def test_norm_preserved_through_every_layer(self):
        inst = generate_instance(3, 3, 8, "haar", seed=42)
        amps = basis_vector(9, 0)
        for layer in inst.layers:
            amps = apply_layer_to_vector(amps, 9, layer)
            assert abs(np.linalg.norm(amps) - 1.0) < 1e-12

    def test_run_is_deterministic(self):
        inst = generate_instance(2, 3, 6, "haar", seed=9)
        a = statevector_run(inst).amplitudes
        b = statevector_run(inst).amplitudes
        np.testing.assert_array_equal(a, b)

    def test_qubit_cap_raises_with_requirement(self):
        inst = generate_instance(6, 6, 0, "cz", seed=1)
        with pytest.raises(ResourceError) as exc:
            statevector_run(inst)
        assert exc.value.required == (1 << 36) * 16
        assert exc.value.cap == (1 << 25) * 16

    def test_independent_deep_states_overlap_at_haar_level(self):
        vals = []
        for k in range(100):
            a = statevector_run(generate_instance(2, 4, 10, "haar", seed=1000 + k))
            b = statevector_run(generate_instance(2, 4, 10, "haar", seed=50000 + k))
            vals.append(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
        assert 0.6 * 2**-8 < np.mean(vals) < 1.5 * 2**-8


def product_peps(kets, n_r, n_c, chi=4):
    """Hand-built PEPS for a product state, bypassing the update engine."""
    lattice = build_lattice(n_r, n_c)
    state = init_product_state(lattice, chi)
    for site, ket in enumerate(kets):
        state.gammas[site] = DenseTensor(
            np.asarray(ket, dtype=complex).reshape(2, 1, 1, 1, 1),
            CANONICAL_LEGS)
    return state


def random_peps(n_r, n_c, bond, seed):
    """Random tensors in the PEPS container; not gauged, but a perfectly
    well-defined network to contract."""
    rng = np.random.default_rng(seed)
    lattice = build_lattice(n_r, n_c)
    state = init_product_state(lattice, bond)
    for site in range(lattice.n_sites):
        r, c = lattice.site_coords(site)
        dims = (2,
                bond if r > 0 else 1,
                bond if c > 0 else 1,
                bond if r + 1 < n_r else 1,
                bond if c + 1 < n_c else 1)
        data = rng.standard_normal(dims) + 1j * rng.standard_normal(dims)
        state.gammas[site] = DenseTensor(data, CANONICAL_LEGS)
    for key in state.lambdas:
        lam = np.sort(rng.uniform(0.2, 1.0, bond))[::-1]
        state.lambdas[key] = lam / np.linalg.norm(lam)
    return state


def contract_brute_force(state):
    """Independent full contraction: one giant einsum with every Gamma
    and every edge weight as separate operands."""
    lattice = state.lattice
    n_r, n_c = lattice.n_r, lattice.n_c
    n = lattice.n_sites
    next_id = [n]

    def fresh():
        next_id[0] += 1
        return next_id[0]

    bond_ids = {e.key: fresh() for e in lattice.edges}
    operands = []
    for site in range(n):
        r, c = lattice.site_coords(site)
        ids = [site]
        for leg in ("u", "l", "d", "r"):
            key = state.edge_for_leg(site, leg)
            ids.append(bond_ids[key] if key is not None else fresh())
        operands.extend([state.gammas[site].data, ids])
    for key, lam in state.lambdas.items():
        operands.extend([lam, [bond_ids[key]]])
    out = np.einsum(*operands, list(range(n)), optimize=True)
    return out.reshape(-1) * np.exp(state.log_scale)


class TestPepsContraction:
    def test_fresh_product_state_contracts_to_all_zeros_ket(self):
        state = init_product_state(build_lattice(3, 3), 4)
        np.testing.assert_array_equal(peps_to_statevector(state),
                                      basis_vector(9, 0))

    def test_hand_built_product_state_matches_kron(self):
        rng = np.random.default_rng(5)
        kets = []
        for _ in range(6):
            k = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            kets.append(k / np.linalg.norm(k))
        state = product_peps(kets, 2, 3)
        want = kets[0]
        for k in kets[1:]:
            want = np.kron(want, k)
        np.testing.assert_allclose(peps_to_statevector(state), want, atol=1e-14)

    @pytest.mark.parametrize("n_r,n_c,bond", [(2, 2, 3), (2, 3, 2), (3, 3, 2)])
    def test_matches_independent_einsum_contraction(self, n_r, n_c, bond):
        state = random_peps(n_r, n_c, bond, seed=n_r * 10 + n_c + bond)
        got = peps_to_statevector(state)
        want = contract_brute_force(state)
        np.testing.assert_allclose(got, want, atol=1e-12 * np.abs(want).max())

    def test_chunked_and_unchunked_sweeps_agree(self):
        state = random_peps(3, 3, 3, seed=77)
        v1 = peps_to_statevector(state, chunk_bytes=1)
        v2 = peps_to_statevector(state, chunk_bytes=1 << 30)
        np.testing.assert_allclose(v1, v2, atol=1e-13 * np.abs(v2).max())

    def test_memory_cap_raises_before_allocating(self):
        state = random_peps(3, 3, 4, seed=3)
        with pytest.raises(ResourceError) as exc:
            peps_to_statevector(state, mem_cap_bytes=100)
        assert exc.value.cap == 100
        assert exc.value.required > 100

    def test_overlap_and_fidelity_of_identical_states(self):
        rng = np.random.default_rng(11)
        kets = []
        for _ in range(4):
            k = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            kets.append(k / np.linalg.norm(k))
        state = product_peps(kets, 2, 2)
        vec = peps_to_statevector(state)
        psi = StateVector(4, vec.copy())
        ov = peps_overlap(state, psi)
        assert abs(ov - np.vdot(vec, vec)) < 1e-14
        assert abs(exact_fidelity(state, psi) - 1.0) < 1e-14


class TestNxeb:
    def test_identical_tables_give_one(self):
        p = np.array([0.4, 0.3, 0.2, 0.1])
        assert abs(nxeb(p, p) - 1.0) < 1e-14

    def test_uniform_simulation_gives_zero(self):
        q = np.array([0.7, 0.1, 0.1, 0.1])
        p = np.full(4, 0.25)
        assert abs(nxeb(p, q)) < 1e-14

    def test_two_outcome_table_by_hand(self):
        # 2*(0.6*0.8 + 0.4*0.2) - 1 = 0.12 over 2*(0.64+0.04) - 1 = 0.36
        val = nxeb(np.array([0.6, 0.4]), np.array([0.8, 0.2]))
        assert abs(val - 1.0 / 3.0) < 1e-14

    def test_tables_are_normalized_before_use(self):
        p = np.array([0.6, 0.4])
        q = np.array([0.8, 0.2])
        val = nxeb(3.0 * p, 7.0 * q)
        assert abs(val - 1.0 / 3.0) < 1e-14

    def test_uniform_exact_table_is_degenerate(self):
        with pytest.raises(DegenerateDataError):
            nxeb(np.array([0.7, 0.1, 0.1, 0.1]), np.full(4, 0.25))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            nxeb(np.ones(4) / 4, np.ones(8) / 8)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(DimensionError):
            nxeb(np.ones(6) / 6, np.ones(6) / 6)


class TestPorterThomas:
    def test_uniform_table_distance_is_one_minus_inv_e(self):
        p = np.full(1 << 10, 2.0**-10)
        assert abs(ptd_distance(p) - (1.0 - np.exp(-1.0))) < 1e-6

    def test_exponential_table_is_close(self):
        rng = np.random.default_rng(123)
        draws = rng.exponential(size=1 << 14)
        assert ptd_distance(draws / draws.sum()) < 0.02

    def test_concentrated_table_is_far(self):
        p = np.zeros(256)
        p[0] = 1.0
        assert ptd_distance(p) > 0.5


class TestEntropy:
    def test_product_state_has_zero_entropy(self):
        psi = StateVector(3, basis_vector(3, 5))
        ent, spectrum = entanglement_entropy(psi, 1)
        assert abs(ent) < 1e-14
        np.testing.assert_allclose(np.sort(spectrum)[::-1][:1], [1.0],
                                   atol=1e-14)

    def test_bell_pair_is_one_bit(self):
        amps = np.zeros(4, dtype=complex)
        amps[0] = amps[3] = 1 / np.sqrt(2)
        ent, spectrum = entanglement_entropy(StateVector(2, amps), 1)
        assert abs(ent - 1.0) < 1e-14
        np.testing.assert_allclose(spectrum, [2**-0.5, 2**-0.5], atol=1e-14)

    def test_ghz_is_one_bit_across_every_cut(self):
        amps = np.zeros(16, dtype=complex)
        amps[0] = amps[15] = 1 / np.sqrt(2)
        psi = StateVector(4, amps)
        for cut in (1, 2, 3):
            assert abs(entanglement_entropy(psi, cut)[0] - 1.0) < 1e-14

    def test_complementary_cuts_agree_for_random_state(self):
        rng = np.random.default_rng(8)
        amps = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        amps /= np.linalg.norm(amps)
        psi = StateVector(6, amps)
        rev = amps.reshape((2,) * 6).transpose(5, 4, 3, 2, 1, 0).reshape(-1)
        flipped = StateVector(6, rev)
        for cut in range(1, 6):
            a = entanglement_entropy(psi, cut)[0]
            b = entanglement_entropy(flipped, 6 - cut)[0]
            assert abs(a - b) < 1e-12

    def test_profile_has_one_entry_per_cut(self):
        psi = StateVector(4, basis_vector(4, 0))
        prof = entropy_profile(psi)
        assert len(prof) == 3
        assert max(abs(s) for s in prof) < 1e-14

    def test_cut_out_of_range_rejected(self):
        psi = StateVector(3, basis_vector(3, 0))
        for cut in (0, 3):
            with pytest.raises(DimensionError):
                entanglement_entropy(psi, cut)


class TestOperatorSchmidt:
    def test_cz_has_two_equal_coefficients(self):
        np.testing.assert_allclose(operator_schmidt(cz_matrix()), [1.0, 1.0],
                                   atol=1e-14)

    def test_identity_has_a_single_coefficient(self):
        np.testing.assert_allclose(operator_schmidt(np.eye(4)), [1.0],
                                   atol=1e-14)

    def test_full_swap_angle_has_four_equal_coefficients(self):
        s = operator_schmidt(fsim_matrix(np.pi / 2, np.pi / 6))
        np.testing.assert_allclose(s, [1.0, 1.0, 1.0, 1.0], atol=1e-14)

    def test_haar_draws_are_non_degenerate(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            s = operator_schmidt(haar_unitary4(rng))
            assert len(s) == 4
            assert np.min(-np.diff(s)) > 1e-10

    def test_zero_matrix_rejected(self):
        with pytest.raises(DegenerateInputError):
            operator_schmidt(np.zeros((4, 4)))

    def test_wrong_shape_rejected(self):
        with pytest.raises(DimensionError):
            operator_schmidt(np.eye(2))


class TestMetrics:
    def test_probabilities_normalize(self):
        p = bitstring_probabilities(np.array([1.0, 1.0j, -1.0, 0.0]))
        np.testing.assert_allclose(p, [1 / 3, 1 / 3, 1 / 3, 0.0], atol=1e-15)

    def test_metrics_of_a_state_against_itself(self):
        rng = np.random.default_rng(21)
        kets = []
        for _ in range(4):
            k = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            kets.append(k / np.linalg.norm(k))
        state = product_peps(kets, 2, 2)
        psi = StateVector(4, peps_to_statevector(state))
        m = compute_metrics(state, psi, include_entropy=True)
        assert abs(m.f_ex - 1.0) < 1e-12
        assert abs(m.f_nxeb - 1.0) < 1e-12
        assert m.ptd_peps == m.ptd_exact
        assert len(m.entropy_profile) == 3
        assert len(m.spectra) == 3
