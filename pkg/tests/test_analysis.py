"""Fidelity-law fits, error rates, references, and aggregation."""

import numpy as np
import pytest

from supeps.analysis import (
    aggregate_instances,
    anticoncentration_depth,
    build_error_report,
    cost_estimate,
    error_per_gate,
    fit_scaling,
    fit_three_stage,
    mps_error_reference,
)
from supeps.errors import (
    AlignmentError,
    DegenerateDataError,
    ParameterError,
    UnderdeterminedError,
)

LN2 = np.log(2.0)


class TestErrorPerGate:
    def test_perfect_fidelity_is_zero_error(self):
        assert error_per_gate(1.0, 48) == 0.0

    def test_inverts_the_product_form(self):
        assert abs(error_per_gate(0.99**48, 48) - 0.01) < 1e-12

    def test_roundtrip_across_magnitudes(self):
        for f in (0.9, 0.5, 1e-3, 2.0**-16):
            for g in (1, 7, 48, 1000):
                eps = error_per_gate(f, g)
                back = (1.0 - eps) ** g
                assert abs(back - f) < 1e-12 * f

    def test_rejects_non_positive_fidelity(self):
        for bad in (0.0, -0.5):
            with pytest.raises(ParameterError):
                error_per_gate(bad, 10)

    def test_rejects_bad_gate_count(self):
        with pytest.raises(ParameterError):
            error_per_gate(0.5, 0)


def synthetic_series(n, d_tr, eps_layer, depths, kind):
    series = {}
    for d in depths:
        lnf = 0.0 if d <= d_tr else -eps_layer * (d - d_tr)
        if kind == "ex":
            lnf = max(lnf, -n * LN2)
        series[d] = float(np.exp(lnf))
    return series


class TestThreeStageFit:
    def test_recovers_its_own_model_exactly(self):
        series = synthetic_series(16, 8, 0.5, range(1, 41), "ex")
        fit = fit_three_stage(series, 16, kind="ex")
        assert abs(fit.d_tr - 8.0) < 1e-6
        assert abs(fit.epsilon_layer - 0.5) < 1e-6
        assert abs(fit.d_sat - (8.0 + 16 * LN2 / 0.5)) < 1e-6
        assert fit.residual < 1e-9

    def test_model_value_at_saturation_depth_is_the_floor(self):
        series = synthetic_series(16, 8, 0.5, range(1, 41), "ex")
        fit = fit_three_stage(series, 16, kind="ex")
        assert abs(fit.log_fidelity(fit.d_sat) - (-16 * LN2)) < 1e-9

    def test_estimate_kind_has_no_floor(self):
        series = synthetic_series(16, 6, 0.4, range(1, 41), "apx")
        fit = fit_three_stage(series, 16, kind="apx")
        assert abs(fit.d_tr - 6.0) < 1e-6
        assert abs(fit.epsilon_layer - 0.4) < 1e-6
        assert fit.floor_depths == ()
        deep = fit.log_fidelity(100.0)
        assert deep < -16 * LN2

    def test_tolerates_noise_in_the_decay(self):
        # the plateau is exact in practice; fluctuations live in the decay
        rng = np.random.default_rng(4)
        series = synthetic_series(16, 8, 0.5, range(1, 41), "ex")
        noisy = {d: float(f * np.exp(rng.normal(0, 0.05))) if f < 1.0 else f
                 for d, f in series.items() if f > 2.0**-16 * 10}
        fit = fit_three_stage(noisy, 16, kind="ex")
        assert abs(fit.d_tr - 8.0) < 1.0
        assert abs(fit.epsilon_layer - 0.5) < 0.05
        assert fit.residual < 0.15

    def test_flat_series_fits_infinite_onset(self):
        fit = fit_three_stage({d: 1.0 for d in range(1, 41)}, 16, kind="ex")
        assert fit.d_tr == np.inf
        assert fit.epsilon_layer == 0.0
        assert fit.d_sat == np.inf

    def test_too_few_decaying_points_is_underdetermined(self):
        series = {4: 1.0, 12: float(np.exp(-2)), 16: float(np.exp(-4))}
        with pytest.raises(UnderdeterminedError):
            fit_three_stage(series, 40, kind="ex")

    def test_growing_series_is_degenerate(self):
        series = {4: 0.01, 8: 0.05, 12: 0.2, 16: 0.5}
        with pytest.raises(DegenerateDataError):
            fit_three_stage(series, 100, kind="ex")

    def test_accepts_pair_iterables(self):
        pairs = [(d, f) for d, f in
                 synthetic_series(16, 8, 0.5, range(1, 41), "ex").items()]
        fit = fit_three_stage(pairs, 16, kind="ex")
        assert abs(fit.d_tr - 8.0) < 1e-6

    def test_rejects_bad_kind_and_empty(self):
        with pytest.raises(ParameterError):
            fit_three_stage({1: 1.0}, 16, kind="exact")
        with pytest.raises(UnderdeterminedError):
            fit_three_stage({}, 16)


def collapse_points(alpha, beta, chis, depths):
    pts = []
    for chi in chis:
        for d in depths:
            eps = max(alpha * (1.0 - beta * np.log2(chi) / d), 0.0)
            pts.append((chi, d, eps))
    return pts


class TestScalingFit:
    def test_recovers_exact_collapse(self):
        pts = collapse_points(0.2, 3.0, (2, 4, 8, 16, 32), (12, 16, 20))
        fit = fit_scaling(pts, instances=6)
        assert abs(fit.alpha - 0.2) < 1e-9
        assert abs(fit.beta - 3.0) < 1e-9
        assert fit.residual < 1e-12
        assert fit.instances == 6
        assert fit.zero_points == sum(1 for _, _, e in pts if e == 0.0)
        assert fit.points_used + fit.zero_points == len(pts)

    def test_derived_quantities(self):
        pts = collapse_points(0.2, 3.0, (2, 4, 8, 16, 32), (12, 16, 20))
        fit = fit_scaling(pts)
        assert abs(fit.d_tr(8) - 9.0) < 1e-9
        assert abs(fit.epsilon_layer(36) - 3.6) < 1e-9
        assert abs(fit.predict(4, 12) - 0.1) < 1e-9
        assert fit.predict(32, 12) == 0.0

    def test_all_zero_error_is_degenerate(self):
        pts = [(c, 16, 0.0) for c in (4, 8, 16, 32)]
        with pytest.raises(DegenerateDataError):
            fit_scaling(pts)

    def test_needs_four_chi_values(self):
        pts = collapse_points(0.2, 3.0, (2, 4, 8), (12, 16, 20))
        with pytest.raises(UnderdeterminedError):
            fit_scaling(pts)

    def test_depths_must_be_schedule_periods(self):
        with pytest.raises(ParameterError):
            fit_scaling([(2, 13, 0.1), (4, 13, 0.05), (8, 13, 0.02),
                         (16, 13, 0.01)])

    def test_inverted_trend_is_degenerate(self):
        pts = [(2, 16, 0.01), (4, 16, 0.05), (8, 16, 0.1), (16, 16, 0.2)]
        with pytest.raises(DegenerateDataError):
            fit_scaling(pts)


class TestMpsReference:
    def test_exactness_threshold_bond_dimension(self):
        n = 16
        chi = 2 ** (n // 2) // 4
        assert mps_error_reference(n, chi, 20) == 0.0

    def test_direct_substitution(self):
        want = (LN2 - np.log(4.0) / 4.0) / 10.0
        assert abs(mps_error_reference(8, 1, 10) - want) < 1e-15

    def test_monotone_non_increasing_in_chi(self):
        vals = [mps_error_reference(16, chi, 12) for chi in (1, 2, 4, 8, 64,
                                                             256, 1024)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] == 0.0

    def test_rejects_odd_qubit_count(self):
        with pytest.raises(ParameterError):
            mps_error_reference(9, 4, 10)


class TestCostEstimate:
    def test_doubling_chi_costs_two_to_the_fifth(self):
        f1, m1 = cost_estimate(6, 6, 8, 20)
        f2, m2 = cost_estimate(6, 6, 16, 20)
        assert f2 / f1 == 32.0
        assert m2 / m1 == 16.0

    def test_doubling_qubits_doubles_both(self):
        f1, m1 = cost_estimate(4, 4, 8, 20)
        f2, m2 = cost_estimate(4, 8, 8, 20)
        assert f2 / f1 == 2.0
        assert m2 / m1 == 2.0

    def test_log_depth_regime_is_polynomial(self):
        # depth ~ 2.15 ln n with chi = n grows as n^6 log n
        ns = (16, 64, 256)
        vals = []
        for n in ns:
            side = int(np.sqrt(n))
            depth = max(1, round(2.15 * np.log(n)))
            f, _ = cost_estimate(side, side, n, depth)
            vals.append(f / (n**6 * np.log(n)))
        assert max(vals) / min(vals) < 1.3

    def test_rejects_tiny_lattice(self):
        with pytest.raises(ParameterError):
            cost_estimate(1, 4, 8, 10)


class TestAnticoncentration:
    def test_small_case(self):
        assert anticoncentration_depth(4, 2.0) == 2.0

    def test_natural_log_coefficient(self):
        depth = anticoncentration_depth(np.e, 2.98)
        assert abs(depth - 2.98 / (2 * LN2)) < 1e-12
        assert abs(2.98 / (2 * LN2) - 2.15) < 0.01

    def test_squaring_n_doubles_depth(self):
        assert abs(anticoncentration_depth(256, 3.0)
                   - 2 * anticoncentration_depth(16, 3.0)) < 1e-12

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(ParameterError):
            anticoncentration_depth(1, 2.0)
        with pytest.raises(ParameterError):
            anticoncentration_depth(16, 0.0)


class TestReportsAndAggregation:
    def test_report_derives_errors(self):
        rep = build_error_report((0, 4, 8), (1.0, 0.9, 0.5), (0, 24, 48))
        assert rep.epsilons[0] == 0.0
        assert abs(rep.epsilons[1] - error_per_gate(0.9, 24)) < 1e-15
        assert rep.kind == "apx"

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(AlignmentError):
            build_error_report((0, 4), (1.0,), (0, 24))

    def test_identical_reports_have_zero_spread(self):
        reps = [build_error_report((4, 8), (0.9, 0.5), (24, 48))
                for _ in range(3)]
        agg = aggregate_instances(reps)
        assert agg.f_mean == (0.9, 0.5)
        assert agg.f_std == (0.0, 0.0)
        assert agg.n_instances == 3

    def test_two_values_by_hand(self):
        reps = [build_error_report((4,), (0.2,), (24,)),
                build_error_report((4,), (0.4,), (24,))]
        agg = aggregate_instances(reps)
        assert abs(agg.f_mean[0] - 0.3) < 1e-15
        assert abs(agg.f_std[0] - np.sqrt(0.02)) < 1e-15

    def test_grid_mismatch_is_alignment_error(self):
        reps = [build_error_report((4, 8), (0.9, 0.5), (24, 48)),
                build_error_report((4, 12), (0.9, 0.5), (24, 72))]
        with pytest.raises(AlignmentError):
            aggregate_instances(reps)

    def test_mixed_kinds_rejected(self):
        reps = [build_error_report((4,), (0.9,), (24,), kind="ex"),
                build_error_report((4,), (0.9,), (24,), kind="apx")]
        with pytest.raises(AlignmentError):
            aggregate_instances(reps)

    def test_single_report_rejected(self):
        with pytest.raises(ParameterError):
            aggregate_instances([build_error_report((4,), (0.9,), (24,))])
