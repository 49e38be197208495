"""Post-processing of fidelity traces: error per gate, the three-stage
fidelity law, the (alpha, beta) scaling collapse, closed-form matrix-
product-state and cost references, and instance aggregation.
"""

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateDataError,
    ParameterError,
    UnderdeterminedError,
)

__all__ = [
    "ErrorReport",
    "AggregateSeries",
    "ThreeStageFit",
    "ScalingFit",
    "error_per_gate",
    "build_error_report",
    "fit_three_stage",
    "fit_scaling",
    "mps_error_reference",
    "cost_estimate",
    "anticoncentration_depth",
    "aggregate_instances",
]

COORDINATION = 4
LOCAL_DIM = 2


def error_per_gate(fidelity, n_2qg):
    """Effective error per two-qubit gate implied by F = (1 - eps)^n_2qg,
    evaluated in the log domain as 1 - exp(ln F / n_2qg)."""
    if n_2qg < 1:
        raise ParameterError(f"gate count must be >= 1, got {n_2qg}")
    if fidelity <= 0.0:
        raise ParameterError(f"fidelity must be positive, got {fidelity}")
    if fidelity > 1.0 + 1e-12:
        raise ParameterError(f"fidelity must be <= 1, got {fidelity}")
    f = min(float(fidelity), 1.0)
    return -np.expm1(np.log(f) / n_2qg)


class ErrorReport:
    """Per-depth fidelity series of one run with derived error rates.

    kind tags which fidelity the series holds: "ex" (exact overlap) or
    "apx" (discarded-weight estimate).
    """

    __slots__ = ("depths", "fidelities", "gate_counts", "epsilons", "kind")

    def __init__(self, depths, fidelities, gate_counts, epsilons, kind):
        self.depths = depths
        self.fidelities = fidelities
        self.gate_counts = gate_counts
        self.epsilons = epsilons
        self.kind = kind


def build_error_report(depths, fidelities, gate_counts, kind="apx"):
    """Bundle parallel depth/fidelity/gate-count series, deriving the
    per-gate error at every depth (zero where no gate has acted yet)."""
    depths = tuple(int(d) for d in depths)
    fidelities = tuple(float(f) for f in fidelities)
    gate_counts = tuple(int(g) for g in gate_counts)
    if not (len(depths) == len(fidelities) == len(gate_counts)):
        raise AlignmentError(
            f"series lengths differ: {len(depths)} depths, "
            f"{len(fidelities)} fidelities, {len(gate_counts)} gate counts")
    if kind not in ("ex", "apx"):
        raise ParameterError(f"kind must be 'ex' or 'apx', got {kind!r}")
    eps = tuple(
        0.0 if g == 0 else error_per_gate(f, g)
        for f, g in zip(fidelities, gate_counts))
    return ErrorReport(depths, fidelities, gate_counts, eps, kind)


class ThreeStageFit:
    """Fitted piecewise fidelity law: flat at 1, exponential decay of
    rate epsilon_layer per layer beyond d_tr, and (for exact-fidelity
    input) a saturation floor of 2^-n reached at d_sat."""

    __slots__ = ("d_tr", "epsilon_layer", "d_sat", "residual", "kind", "n",
                 "stage1_depths", "decay_depths", "floor_depths")

    def __init__(self, d_tr, epsilon_layer, d_sat, residual, kind, n,
                 stage1_depths, decay_depths, floor_depths):
        self.d_tr = d_tr
        self.epsilon_layer = epsilon_layer
        self.d_sat = d_sat
        self.residual = residual
        self.kind = kind
        self.n = n
        self.stage1_depths = stage1_depths
        self.decay_depths = decay_depths
        self.floor_depths = floor_depths

    def log_fidelity(self, depth):
        """ln F of the fitted model at a depth."""
        if depth <= self.d_tr:
            return 0.0
        val = -self.epsilon_layer * (depth - self.d_tr)
        if self.kind == "ex":
            return max(val, -self.n * np.log(2.0))
        return val


# classification cutoffs for the three stages, in ln F
_STAGE1_TOL = 1e-6
_FLOOR_MARGIN = np.log(10.0)


def fit_three_stage(series, n, kind="ex"):
    """Fit ln F against the piecewise law: 0 until d_tr, then a line of
    slope -epsilon_layer, then (exact fidelities only) the 2^-n floor.

    ``series`` maps depth -> fidelity (a dict or an iterable of pairs).
    Points within a factor of 10 of the floor are treated as saturated
    and excluded from the slope fit; a flat series fits d_tr = inf.
    """
    if hasattr(series, "items"):
        pairs = sorted(series.items())
    else:
        pairs = sorted((int(d), float(f)) for d, f in series)
    if kind not in ("ex", "apx"):
        raise ParameterError(f"kind must be 'ex' or 'apx', got {kind!r}")
    if n < 1:
        raise ParameterError(f"qubit count must be >= 1, got {n}")
    if not pairs:
        raise UnderdeterminedError("empty fidelity series")
    depths = np.array([p[0] for p in pairs], dtype=float)
    lnf = np.array([np.log(p[1]) for p in pairs])

    floor = -n * np.log(2.0)
    stage1 = lnf >= -_STAGE1_TOL
    saturated = (lnf <= floor + _FLOOR_MARGIN) if kind == "ex" else np.zeros(
        len(lnf), dtype=bool)
    decay = ~stage1 & ~saturated

    if not decay.any() and not saturated.any():
        return ThreeStageFit(np.inf, 0.0, np.inf, 0.0, kind, n,
                             tuple(depths[stage1]), (), ())
    if decay.sum() < 3:
        raise UnderdeterminedError(
            f"only {int(decay.sum())} depths in the decaying stage; "
            f"need at least 3")

    x = depths[decay]
    y = lnf[decay]
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0:
        raise DegenerateDataError("fidelity series does not decay with depth")
    eps_layer = -slope
    d_tr = intercept / eps_layer
    resid = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    d_sat = d_tr + n * np.log(2.0) / eps_layer
    return ThreeStageFit(float(d_tr), float(eps_layer), float(d_sat), resid,
                         kind, n,
                         tuple(depths[stage1]), tuple(x),
                         tuple(depths[saturated]))


class ScalingFit:
    """Fitted error-per-gate collapse eps(chi, D) = max[alpha (1 -
    (beta/D) log2 chi), 0] over a set of (chi, depth) points."""

    __slots__ = ("alpha", "beta", "residual", "instances", "points_used",
                 "zero_points")

    def __init__(self, alpha, beta, residual, instances, points_used,
                 zero_points):
        self.alpha = alpha
        self.beta = beta
        self.residual = residual
        self.instances = instances
        self.points_used = points_used
        self.zero_points = zero_points

    def d_tr(self, chi):
        """Depth at which the fitted error reaches zero for a given chi."""
        return self.beta * np.log2(chi)

    def epsilon_layer(self, n):
        return self.alpha * n / 2.0

    def predict(self, chi, depth):
        return max(self.alpha * (1.0 - self.beta * np.log2(chi) / depth), 0.0)


def fit_scaling(points, instances=1):
    """Least squares of eps = alpha - (alpha beta) log2(chi)/D over the
    points with eps > 0; eps = 0 points only bound the zero crossing.

    ``points`` is an iterable of (chi, depth, eps). Depths must be
    multiples of 4 (one full period of the gate schedule, where the
    per-depth wiggle of the error rate vanishes) and at least 4
    distinct chi values must be present.
    """
    pts = [(int(c), int(d), float(e)) for c, d, e in points]
    if not pts:
        raise UnderdeterminedError("no scaling points given")
    for chi, depth, _ in pts:
        if chi < 1:
            raise ParameterError(f"chi must be >= 1, got {chi}")
        if depth < 4 or depth % 4:
            raise ParameterError(
                f"depths must be positive multiples of 4, got {depth}")
    if len({c for c, _, _ in pts}) < 4:
        raise UnderdeterminedError(
            "need at least 4 distinct chi values to constrain the collapse")
    live = [(c, d, e) for c, d, e in pts if e > 0.0]
    zero = [(c, d, e) for c, d, e in pts if e <= 0.0]
    if not live:
        raise DegenerateDataError("every point sits at eps = 0")
    u = np.array([np.log2(c) / d for c, d, _ in live])
    eps = np.array([e for _, _, e in live])
    if len(live) < 2 or np.ptp(u) == 0.0:
        raise UnderdeterminedError("scaling points do not spread in log2(chi)/D")
    slope, intercept = np.polyfit(u, eps, 1)
    if intercept <= 0 or slope >= 0:
        raise DegenerateDataError(
            "scaling fit inverted: error does not shrink with chi")
    alpha = float(intercept)
    beta = float(-slope / intercept)
    resid = float(np.sqrt(np.mean((eps - (intercept + slope * u)) ** 2)))
    return ScalingFit(alpha, beta, resid, instances, len(live), len(zero))


def mps_error_reference(n, chi, depth):
    """Closed-form error per gate of a matrix-product-state simulation
    truncated at chi on an n-qubit circuit of the given depth, clamped
    at zero where the MPS is exact."""
    if n < 2 or n % 2:
        raise ParameterError(f"qubit count must be even and >= 2, got {n}")
    if chi < 1:
        raise ParameterError(f"chi must be >= 1, got {chi}")
    if depth < 1:
        raise ParameterError(f"depth must be >= 1, got {depth}")
    val = (np.log(2.0) - np.log(4.0 * chi) / (n / 2.0)) / depth
    return float(max(val, 0.0))


def cost_estimate(n_r, n_c, chi, depth):
    """Leading-order flop and memory estimates of the simple-update
    evolution: time D n chi^(z+1) d^2 and space n chi^z d with
    coordination z = 4 and local dimension d = 2. The subleading SVD
    term (chi^3 d^6 per pair) is absorbed into the constant."""
    if n_r < 2 or n_c < 2:
        raise ParameterError("lattice must be at least 2x2")
    if chi < 1 or depth < 0:
        raise ParameterError("chi must be >= 1 and depth >= 0")
    n = n_r * n_c
    flops = float(depth) * n * float(chi) ** (COORDINATION + 1) * LOCAL_DIM**2
    memory = float(n) * float(chi) ** COORDINATION * LOCAL_DIM
    return flops, memory


def anticoncentration_depth(n, beta):
    """Depth at which the output distribution anticoncentrates: the
    exact bond dimension 2^(D/beta) reaches sqrt(n), i.e. (beta/2) log2 n."""
    if n < 2:
        raise ParameterError(f"qubit count must be >= 2, got {n}")
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    return beta / 2.0 * np.log2(n)


class AggregateSeries:
    """Depth-aligned mean and sample standard deviation over instances."""

    __slots__ = ("depths", "f_mean", "f_std", "eps_mean", "eps_std",
                 "n_instances", "kind")

    def __init__(self, depths, f_mean, f_std, eps_mean, eps_std,
                 n_instances, kind):
        self.depths = depths
        self.f_mean = f_mean
        self.f_std = f_std
        self.eps_mean = eps_mean
        self.eps_std = eps_std
        self.n_instances = n_instances
        self.kind = kind


def aggregate_instances(reports):
    """Elementwise mean and sample std of fidelities (and error rates)
    over instance reports sharing one depth grid. Fidelities are
    averaged arithmetically, not in the log domain."""
    reports = list(reports)
    if len(reports) < 2:
        raise ParameterError(
            f"need at least 2 instance reports, got {len(reports)}")
    depths = reports[0].depths
    kind = reports[0].kind
    for r in reports[1:]:
        if r.depths != depths:
            raise AlignmentError(
                f"depth grids differ: {depths} vs {r.depths}")
        if r.kind != kind:
            raise AlignmentError(f"mixed report kinds: {kind} vs {r.kind}")
    f = np.array([r.fidelities for r in reports])
    e = np.array([r.epsilons for r in reports])
    return AggregateSeries(
        depths=depths,
        f_mean=tuple(f.mean(axis=0)),
        f_std=tuple(f.std(axis=0, ddof=1)),
        eps_mean=tuple(e.mean(axis=0)),
        eps_std=tuple(e.std(axis=0, ddof=1)),
        n_instances=len(reports),
        kind=kind,
    )
