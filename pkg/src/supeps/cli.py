"""Experiment orchestration: config files, batch runs, fits, plot tables.

One run directory holds everything an experiment produced:

    config.json                         the run configuration
    manifest.json                       config hash, seed, file list, status
    instances/instance_00.json          seeded circuit descriptions
    traces/trace_i00_chi0004.tsv        per-layer fidelity trace
    traces/trace_i00_chi0004.times.tsv  wall-clock sidecar
    oracle/oracle_i00_chi0004.tsv       exact-state checkpoint metrics
    spectra/spectra_i00_chi0004.tsv     final bond weight spectra
    entropy/entropy_i00_chi0004.tsv     exact entropy profile at final depth
    plots/<kind>.tsv                    plot-ready tables (emit_plot_data)
    fits.json                           decay and collapse fits (analyze_run)

Tables are tab-separated with '#'-prefixed header comments.  Floats are
printed as shortest round-trip decimals, so re-parsing and re-emitting a
table reproduces it byte for byte, and two runs of the same config write
byte-identical canonical files.  Wall-clock times are never canonical;
they live in the .times.tsv sidecars.

The manifest's config hash covers exactly the fields that determine the
computed data.  Destination directory and resource caps (memory bound,
thread cap) are environmental and excluded; fSim angles count only when
the sequence actually uses them.
"""

import argparse
import hashlib
import json
import os
import pathlib
import sys

import numpy as np

from .analysis import (
    aggregate_instances,
    build_error_report,
    error_per_gate,
    fit_scaling,
    fit_three_stage,
)
from .circuits import (
    build_lattice,
    generate_instance,
    save_instance,
    scheduled_gate_count,
)
from .errors import (
    DegenerateDataError,
    EmptyOutputError,
    ParameterError,
    ResourceError,
    SupepsError,
    UnderdeterminedError,
)
from .oracle import (
    DEFAULT_MEM_CAP,
    StateVector,
    apply_layer_to_vector,
    compute_metrics,
    entropy_profile,
    exact_fidelity,
)
from .peps import apply_layer, init_product_state, lambda_spectra

__all__ = [
    "RunConfig",
    "load_config",
    "save_config",
    "run_experiment",
    "analyze_run",
    "emit_plot_data",
    "main",
    "PLOT_KINDS",
]

PLOT_KINDS = ("fidelity_vs_depth", "epsilon_vs_chi", "spectra", "entropy",
              "nxeb_scatter")

_SEQUENCES = ("cz", "fsim", "haar")


class RunConfig:
    """Everything one experiment needs: lattice, circuit family, bond
    dimensions, instance count and seeding, gauging, oracle switch,
    destination, and resource caps."""

    __slots__ = ("n_r", "n_c", "depth", "sequence", "theta", "phi", "chis",
                 "instances", "seed", "sweeps", "oracle", "residuals",
                 "out_dir", "mem_cap", "threads")

    def __init__(self, n_r, n_c, depth, sequence, chis, out_dir,
                 theta=None, phi=None, instances=1, seed=0, sweeps=2,
                 oracle=False, residuals=True, mem_cap=DEFAULT_MEM_CAP,
                 threads=1):
        self.n_r = int(n_r)
        self.n_c = int(n_c)
        self.depth = int(depth)
        self.sequence = str(sequence)
        self.theta = None if theta is None else float(theta)
        self.phi = None if phi is None else float(phi)
        self.chis = tuple(int(c) for c in chis)
        self.instances = int(instances)
        self.seed = int(seed)
        self.sweeps = int(sweeps)
        self.oracle = bool(oracle)
        self.residuals = bool(residuals)
        self.out_dir = str(out_dir)
        self.mem_cap = int(mem_cap)
        self.threads = int(threads)

    def validate(self):
        if self.sequence not in _SEQUENCES:
            raise ParameterError(f"unknown sequence kind {self.sequence!r}")
        if self.sequence == "fsim" and (self.theta is None or self.phi is None):
            raise ParameterError("fsim sequence requires theta and phi")
        if self.depth < 0:
            raise ParameterError(f"depth must be >= 0, got {self.depth}")
        if not self.chis or any(c < 1 for c in self.chis):
            raise ParameterError(f"need bond dimensions >= 1, got {self.chis}")
        if len(set(self.chis)) != len(self.chis):
            raise ParameterError(f"duplicate bond dimensions in {self.chis}")
        if self.instances < 1:
            raise ParameterError(f"need >= 1 instances, got {self.instances}")
        if self.sweeps < 0:
            raise ParameterError(f"sweeps must be >= 0, got {self.sweeps}")
        if self.mem_cap <= 0:
            raise ParameterError(f"memory cap must be positive, got "
                                 f"{self.mem_cap}")
        if self.threads < 1:
            raise ParameterError(f"thread cap must be >= 1, got {self.threads}")
        if not self.out_dir:
            raise ParameterError("output directory must be non-empty")
        build_lattice(self.n_r, self.n_c)
        return self

    def fsim_angles(self):
        if self.sequence != "fsim":
            return None
        return (self.theta, self.phi)

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__slots__} | {
            "chis": list(self.chis)}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__slots__)
        if unknown:
            raise ParameterError(f"unknown config fields {sorted(unknown)}")
        missing = {"n_r", "n_c", "depth", "sequence", "chis",
                   "out_dir"} - set(data)
        if missing:
            raise ParameterError(f"config missing fields {sorted(missing)}")
        return cls(**data)

    def semantic_dict(self):
        d = {"n_r": self.n_r, "n_c": self.n_c, "depth": self.depth,
             "sequence": self.sequence, "chis": list(self.chis),
             "instances": self.instances, "seed": self.seed,
             "sweeps": self.sweeps, "oracle": self.oracle,
             "residuals": self.residuals}
        if self.sequence == "fsim":
            d["theta"] = self.theta
            d["phi"] = self.phi
        return d

    def config_hash(self):
        blob = json.dumps(self.semantic_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def save_config(config, path):
    text = json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"
    pathlib.Path(path).write_text(text)


def load_config(path):
    return RunConfig.from_dict(json.loads(pathlib.Path(path).read_text()))


def _fmt(value):
    """Canonical cell text: shortest round-trip decimal for floats,
    '-' for missing."""
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_table(path, header_lines, rows):
    lines = [f"# {h}" for h in header_lines]
    lines.extend("\t".join(_fmt(v) for v in row) for row in rows)
    pathlib.Path(path).write_text("\n".join(lines) + "\n")


def _read_table(path):
    header, rows = [], []
    for line in pathlib.Path(path).read_text().splitlines():
        if line.startswith("#"):
            header.append(line[2:])
        elif line:
            rows.append(line.split("\t"))
    return header, rows


def _float_cell(text):
    return None if text == "-" else float(text)


def _cap_threads(n):
    """Best-effort cap on BLAS/OpenMP pools; returns the active limiter."""
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(n)
        return None
    return threadpool_limits(limits=n)


def _job_stem(instance_index, chi):
    return f"i{instance_index:02d}_chi{chi:04d}"


def _checkpoint_depths(n_sites, depth):
    """Oracle checkpoints: every layer on small lattices, the mod-4 grid
    plus the final depth otherwise."""
    if depth == 0:
        return ()
    every = 1 if n_sites <= 16 else 4
    marks = {d for d in range(every, depth + 1, every)}
    marks.add(depth)
    return tuple(sorted(marks))


_TRACE_HEADER = (
    "per-layer fidelity trace",
    "columns: layer set log_fapx f_apx max_bond residual weights",
    "weights: per-edge discarded weights 'a-b:w' joined by ';', '-' if none",
    "residual: post-gauging residual, '-' when not computed",
    "floats: shortest round-trip decimals",
)

_ORACLE_HEADER = (
    "exact-state checkpoint metrics",
    "columns: depth status f_ex f_nxeb ptd_peps ptd_exact",
    "status: ok; refused:<required_bytes> when a resource cap refused;",
    "        degenerate when the exact distribution is uniform",
)

_SPECTRA_HEADER = (
    "final bond weight spectra, one row per weight",
    "columns: edge index value",
)

_ENTROPY_HEADER = (
    "exact-state entanglement entropy at the final depth",
    "columns: cut bits",
)


def _weights_cell(weights):
    if not weights:
        return None
    return ";".join(f"{a}-{b}:{_fmt(float(w))}" for (a, b), w in weights)


def _trace_rows(state):
    rows = [(0, "-", 0.0, 1.0, 1, 0.0, None)]
    for r in state.trace.records:
        rows.append((r.index, r.set_label, float(r.log_fapx),
                     float(np.exp(r.log_fapx)), r.max_bond, r.residual,
                     _weights_cell(r.weights)))
    return rows


def _run_job(config, instance, instance_index, chi, out):
    """Evolve one (instance, chi) pair and write its report files.
    Returns {category: [relative path, ...]}."""
    n = instance.lattice.n_sites
    stem = _job_stem(instance_index, chi)
    state = init_product_state(instance.lattice, chi)

    checkpoints = _checkpoint_depths(n, config.depth) if config.oracle else ()
    sv_bytes = (1 << n) * 16
    sv_ok = config.oracle and sv_bytes <= config.mem_cap
    amps = None
    if sv_ok:
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[0] = 1.0

    oracle_rows = []
    final_entropy = None
    for layer in instance.layers:
        apply_layer(state, layer, sweeps=config.sweeps,
                    compute_residual=config.residuals)
        if sv_ok:
            amps = apply_layer_to_vector(amps, n, layer)
        if layer.index in checkpoints:
            if not sv_ok:
                oracle_rows.append((layer.index, f"refused:{sv_bytes}",
                                    None, None, None, None))
                continue
            final = layer.index == config.depth
            psi = StateVector(n, amps)
            try:
                m = compute_metrics(state, psi, include_entropy=final,
                                    mem_cap_bytes=config.mem_cap)
            except ResourceError as e:
                oracle_rows.append((layer.index, f"refused:{e.required}",
                                    None, None, None, None))
                continue
            except DegenerateDataError:
                # shallow layers can leave the exact distribution uniform,
                # where the cross-entropy estimate is undefined
                f_ex = exact_fidelity(state, psi,
                                      mem_cap_bytes=config.mem_cap)
                oracle_rows.append((layer.index, "degenerate",
                                    float(f_ex), None, None, None))
                if final:
                    final_entropy = entropy_profile(psi)
                continue
            oracle_rows.append((layer.index, "ok", float(m.f_ex),
                                float(m.f_nxeb), float(m.ptd_peps),
                                float(m.ptd_exact)))
            if final and m.entropy_profile is not None:
                final_entropy = m.entropy_profile

    files = {}

    trace_rel = f"traces/trace_{stem}.tsv"
    _write_table(out / trace_rel, _TRACE_HEADER, _trace_rows(state))
    files["traces"] = [trace_rel]

    times_rel = f"traces/trace_{stem}.times.tsv"
    times = [(r.index, float(r.wall_time)) for r in state.trace.records]
    _write_table(out / times_rel,
                 ("wall-clock seconds per layer, non-canonical",
                  "columns: layer seconds"), times)
    files["timings"] = [times_rel]

    spectra_rel = f"spectra/spectra_{stem}.tsv"
    spec_rows = []
    spectra = lambda_spectra(state)
    for key in sorted(spectra):
        spec_rows.extend((f"{key[0]}-{key[1]}", i, float(v))
                         for i, v in enumerate(spectra[key]))
    _write_table(out / spectra_rel, _SPECTRA_HEADER, spec_rows)
    files["spectra"] = [spectra_rel]

    if config.oracle:
        oracle_rel = f"oracle/oracle_{stem}.tsv"
        _write_table(out / oracle_rel, _ORACLE_HEADER, oracle_rows)
        files["oracle"] = [oracle_rel]
    if final_entropy is not None:
        entropy_rel = f"entropy/entropy_{stem}.tsv"
        ent_rows = [(cut, float(bits))
                    for cut, bits in enumerate(final_entropy, start=1)]
        _write_table(out / entropy_rel, _ENTROPY_HEADER, ent_rows)
        files["entropy"] = [entropy_rel]
    return files


def run_experiment(config):
    """Run every (instance, chi) job of the config and write the report
    files plus a manifest. Returns the manifest dict.

    A refused oracle checkpoint becomes a 'refused' row in that job's
    oracle table; the evolution itself always completes. Disk errors
    abort after writing a manifest marked partial.
    """
    config.validate()
    limiter = _cap_threads(config.threads)
    out = pathlib.Path(config.out_dir)
    manifest = {
        "config_hash": config.config_hash(),
        "base_seed": config.seed,
        "status": "partial",
        "error": None,
        "files": {"instances": [], "traces": [], "timings": [],
                  "oracle": [], "spectra": [], "entropy": []},
    }
    try:
        for sub in ("instances", "traces", "spectra", "oracle", "entropy"):
            (out / sub).mkdir(parents=True, exist_ok=True)
        save_config(config, out / "config.json")
        for k in range(config.instances):
            instance = generate_instance(
                config.n_r, config.n_c, config.depth, config.sequence,
                config.seed + k, fsim_angles=config.fsim_angles())
            inst_rel = f"instances/instance_{k:02d}.json"
            save_instance(instance, out / inst_rel)
            manifest["files"]["instances"].append(inst_rel)
            for chi in config.chis:
                job_files = _run_job(config, instance, k, chi, out)
                for category, rels in job_files.items():
                    manifest["files"][category].extend(rels)
    except OSError as e:
        manifest["error"] = f"{type(e).__name__}: {e}"
        try:
            _write_manifest(out, manifest)
        except OSError:
            pass
        raise
    manifest["status"] = "complete"
    _write_manifest(out, manifest)
    del limiter
    return manifest


def _write_manifest(out, manifest):
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    (out / "manifest.json").write_text(text)


def _load_manifest(run_dir):
    path = pathlib.Path(run_dir) / "manifest.json"
    if not path.exists():
        raise EmptyOutputError(f"no manifest in {run_dir}")
    return json.loads(path.read_text())


def _trace_fidelities(run_dir, manifest):
    """{chi: {instance: {depth: f_apx}}} from every trace table."""
    data = {}
    for rel in manifest["files"]["traces"]:
        stem = pathlib.Path(rel).stem
        parts = stem.split("_")
        k = int(parts[1][1:])
        chi = int(parts[2][3:])
        _, rows = _read_table(pathlib.Path(run_dir) / rel)
        per_depth = {int(r[0]): float(r[3]) for r in rows}
        data.setdefault(chi, {})[k] = per_depth
    return data


def analyze_run(run_dir):
    """Fit the per-chi fidelity decays and, when the grid supports it,
    the error-rate collapse; writes fits.json into the run directory."""
    run_dir = pathlib.Path(run_dir)
    manifest = _load_manifest(run_dir)
    config = load_config(run_dir / "config.json")
    lattice = build_lattice(config.n_r, config.n_c)
    n = lattice.n_sites
    traces = _trace_fidelities(run_dir, manifest)
    if not traces:
        raise EmptyOutputError(f"no traces recorded in {run_dir}")

    result = {"config_hash": manifest["config_hash"], "per_chi": {},
              "scaling": None}
    points = []
    for chi in sorted(traces):
        by_instance = traces[chi]
        depths = sorted(next(iter(by_instance.values())))
        series = {d: float(np.mean([by_instance[k][d] for k in by_instance]))
                  for d in depths}
        try:
            fit = fit_three_stage(series, n, kind="apx")
            result["per_chi"][str(chi)] = {
                "d_tr": float(fit.d_tr),
                "epsilon_layer": float(fit.epsilon_layer),
                "d_sat": float(fit.d_sat),
                "residual": float(fit.residual),
                "n_decay": len(fit.decay_depths),
            }
        except (UnderdeterminedError, DegenerateDataError) as e:
            result["per_chi"][str(chi)] = {
                "error": f"{type(e).__name__}: {e}"}
        for d in depths:
            if d > 0 and d % 4 == 0:
                gates = scheduled_gate_count(lattice, d)
                points.append((chi, d, error_per_gate(series[d], gates)))
    try:
        fit = fit_scaling(points, instances=config.instances)
        result["scaling"] = {
            "alpha": float(fit.alpha), "beta": float(fit.beta),
            "residual": float(fit.residual),
            "points_used": fit.points_used, "zero_points": fit.zero_points,
        }
    except (UnderdeterminedError, DegenerateDataError, ParameterError) as e:
        result["scaling"] = {"error": f"{type(e).__name__}: {e}"}
    text = json.dumps(result, sort_keys=True, indent=2) + "\n"
    (run_dir / "fits.json").write_text(text)
    return result


def _emit_fidelity_vs_depth(run_dir, manifest):
    traces = _trace_fidelities(run_dir, manifest)
    rows = []
    for chi in sorted(traces):
        by_instance = traces[chi]
        depths = sorted(next(iter(by_instance.values())))
        for d in depths:
            vals = [by_instance[k][d] for k in sorted(by_instance)]
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
            rows.append((chi, d, float(np.mean(vals)), std, len(vals)))
    header = ("approximate fidelity against depth, instance-averaged",
              "columns: chi depth f_mean f_std n",
              "f_std: sample standard deviation, '-' for one instance")
    return header, rows


def _emit_epsilon_vs_chi(run_dir, manifest, config):
    lattice = build_lattice(config.n_r, config.n_c)
    traces = _trace_fidelities(run_dir, manifest)
    rows = []
    for chi in sorted(traces):
        by_instance = traces[chi]
        depths = [d for d in sorted(next(iter(by_instance.values())))
                  if d > 0 and d % 4 == 0]
        if not depths:
            continue
        gates = tuple(scheduled_gate_count(lattice, d) for d in depths)
        reports = [build_error_report(
            tuple(depths),
            tuple(by_instance[k][d] for d in depths), gates)
            for k in sorted(by_instance)]
        if len(reports) > 1:
            agg = aggregate_instances(reports)
            eps_mean, eps_std = agg.eps_mean, agg.eps_std
        else:
            eps_mean = reports[0].epsilons
            eps_std = (None,) * len(depths)
        rows.extend(
            (chi, d, g, eps_mean[i], eps_std[i], len(reports))
            for i, (d, g) in enumerate(zip(depths, gates)))
    header = ("error per two-qubit gate on the mod-4 depth grid",
              "columns: chi depth gates eps_mean eps_std n",
              "eps_std: sample standard deviation, '-' for one instance")
    return header, rows


def _emit_spectra(run_dir, manifest):
    rows = []
    for rel in sorted(manifest["files"]["spectra"]):
        stem = pathlib.Path(rel).stem
        parts = stem.split("_")
        k = int(parts[1][1:])
        chi = int(parts[2][3:])
        _, raw = _read_table(pathlib.Path(run_dir) / rel)
        by_edge = {}
        for edge, idx, val in raw:
            by_edge.setdefault(edge, []).append((int(idx), float(val)))
        for edge in sorted(by_edge):
            spectrum = sorted(by_edge[edge])
            top = max(v for _, v in spectrum)
            rows.extend((k, chi, edge, i, v / top) for i, v in spectrum)
    header = ("final bond weight spectra, rescaled by each spectrum's "
              "largest element",
              "columns: instance chi edge index value")
    return header, rows


def _emit_entropy(run_dir, manifest):
    by_instance = {}
    for rel in sorted(manifest["files"]["entropy"]):
        stem = pathlib.Path(rel).stem
        k = int(stem.split("_")[1][1:])
        if k in by_instance:
            continue
        _, raw = _read_table(pathlib.Path(run_dir) / rel)
        by_instance[k] = {int(cut): float(bits) for cut, bits in raw}
    rows = []
    if by_instance:
        cuts = sorted(next(iter(by_instance.values())))
        for cut in cuts:
            vals = [by_instance[k][cut] for k in sorted(by_instance)]
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
            rows.append((cut, float(np.mean(vals)), std, len(vals)))
    header = ("exact-state entanglement entropy by cut, instance-averaged",
              "columns: cut bits_mean bits_std n",
              "bits_std: sample standard deviation, '-' for one instance")
    return header, rows


def _emit_nxeb_scatter(run_dir, manifest):
    groups = {}
    for rel in sorted(manifest["files"]["oracle"]):
        stem = pathlib.Path(rel).stem
        chi = int(stem.split("_")[2][3:])
        _, raw = _read_table(pathlib.Path(run_dir) / rel)
        for row in raw:
            if row[1] != "ok":
                continue
            depth = int(row[0])
            groups.setdefault((chi, depth), []).append(
                (float(row[2]), float(row[3])))
    rows = []
    for chi, depth in sorted(groups):
        pairs = groups[(chi, depth)]
        f_ex = [p[0] for p in pairs]
        f_nx = [p[1] for p in pairs]
        std = float(np.std(f_nx, ddof=1)) if len(pairs) > 1 else None
        rows.append((chi, depth, float(np.mean(f_ex)), float(np.mean(f_nx)),
                     std, len(pairs)))
    header = ("exact fidelity against linear cross-entropy estimate, "
              "instance-averaged",
              "columns: chi depth f_ex_mean f_nxeb_mean f_nxeb_std n",
              "f_nxeb_std: sample standard deviation, '-' for one instance")
    return header, rows


def emit_plot_data(run_dir, kind, out_path=None):
    """Write one plot-ready table of the requested kind from a finished
    run directory; returns the written path."""
    if kind not in PLOT_KINDS:
        raise ParameterError(f"unknown plot kind {kind!r}; "
                             f"expected one of {PLOT_KINDS}")
    run_dir = pathlib.Path(run_dir)
    manifest = _load_manifest(run_dir)
    if kind == "fidelity_vs_depth":
        header, rows = _emit_fidelity_vs_depth(run_dir, manifest)
    elif kind == "epsilon_vs_chi":
        config = load_config(run_dir / "config.json")
        header, rows = _emit_epsilon_vs_chi(run_dir, manifest, config)
    elif kind == "spectra":
        header, rows = _emit_spectra(run_dir, manifest)
    elif kind == "entropy":
        header, rows = _emit_entropy(run_dir, manifest)
    else:
        header, rows = _emit_nxeb_scatter(run_dir, manifest)
    if not rows:
        raise EmptyOutputError(f"no rows for plot kind {kind!r} in {run_dir}")
    if out_path is None:
        (run_dir / "plots").mkdir(exist_ok=True)
        out_path = run_dir / "plots" / f"{kind}.tsv"
    _write_table(out_path, header, rows)
    return pathlib.Path(out_path)


def _parse_chis(text):
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        raise ParameterError(f"bad bond dimension list {text!r}; "
                             "expected comma-separated integers") from None


def _add_circuit_flags(p):
    p.add_argument("--rows", type=int, required=True,
                   help="lattice rows")
    p.add_argument("--cols", type=int, required=True,
                   help="lattice columns")
    p.add_argument("--depth", type=int, required=True,
                   help="number of circuit layers")
    p.add_argument("--sequence", choices=_SEQUENCES, required=True,
                   help="two-qubit gate family")
    p.add_argument("--theta", type=float, default=None,
                   help="fSim swap angle (radians)")
    p.add_argument("--phi", type=float, default=None,
                   help="fSim phase angle (radians)")
    p.add_argument("--instances", type=int, default=1,
                   help="number of seeded circuit instances")
    p.add_argument("--seed", type=int, default=0,
                   help="base seed; instance k uses seed+k")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="supeps",
        description="Simple-update PEPS evolution of random quantum "
                    "circuits with an exact state-vector oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write seeded circuit instance files")
    _add_circuit_flags(g)
    g.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("run", help="evolve instances and write report files")
    r.add_argument("--config", default=None,
                   help="JSON config file; other flags are ignored")
    _add_circuit_flags_optional(r)
    r.add_argument("--chi", default=None,
                   help="comma-separated bond dimensions, e.g. 2,4,8")
    r.add_argument("--sweeps", type=int, default=2,
                   help="gauging sweeps per layer")
    r.add_argument("--oracle", action="store_true",
                   help="compute exact-state checkpoint metrics")
    r.add_argument("--no-residuals", action="store_true",
                   help="skip the per-layer gauge residual check")
    r.add_argument("--mem-cap", type=int, default=DEFAULT_MEM_CAP,
                   help="memory bound in bytes for oracle contraction")
    r.add_argument("--threads", type=int, default=1, help="thread cap")
    r.add_argument("--out", default=None, help="output directory")

    a = sub.add_parser("analyze", help="fit fidelity decays and collapse")
    a.add_argument("--run", required=True, help="finished run directory")

    e = sub.add_parser("emit", help="write a plot-ready table")
    e.add_argument("--run", required=True, help="finished run directory")
    e.add_argument("--kind", choices=PLOT_KINDS, required=True)
    e.add_argument("--out", default=None, help="output file path")
    return parser


def _add_circuit_flags_optional(p):
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--sequence", choices=_SEQUENCES, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _config_from_args(args):
    if args.config is not None:
        return load_config(args.config)
    required = {"rows": args.rows, "cols": args.cols, "depth": args.depth,
                "sequence": args.sequence, "chi": args.chi, "out": args.out}
    missing = [f"--{k}" for k, v in required.items() if v is None]
    if missing:
        raise ParameterError(f"run needs {' '.join(missing)} "
                             "(or --config)")
    return RunConfig(
        n_r=args.rows, n_c=args.cols, depth=args.depth,
        sequence=args.sequence, theta=args.theta, phi=args.phi,
        chis=_parse_chis(args.chi), instances=args.instances,
        seed=args.seed, sweeps=args.sweeps, oracle=args.oracle,
        residuals=not args.no_residuals, out_dir=args.out,
        mem_cap=args.mem_cap, threads=args.threads)


def _apply_env(config):
    """SUPEPS_OUT_DIR and SUPEPS_THREADS override the config; no other
    environment variable is consulted."""
    out = os.environ.get("SUPEPS_OUT_DIR")
    if out:
        config.out_dir = out
    threads = os.environ.get("SUPEPS_THREADS")
    if threads:
        try:
            config.threads = int(threads)
        except ValueError:
            raise ParameterError(
                f"SUPEPS_THREADS must be an integer, got {threads!r}"
            ) from None
    return config


def _cmd_generate(args):
    out = pathlib.Path(os.environ.get("SUPEPS_OUT_DIR") or args.out)
    angles = None
    if args.sequence == "fsim":
        if args.theta is None or args.phi is None:
            raise ParameterError("fsim sequence requires --theta and --phi")
        angles = (args.theta, args.phi)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.instances):
        instance = generate_instance(args.rows, args.cols, args.depth,
                                     args.sequence, args.seed + k,
                                     fsim_angles=angles)
        path = out / f"instance_{k:02d}.json"
        save_instance(instance, path)
        print(path)
    return 0


def _cmd_run(args):
    config = _apply_env(_config_from_args(args))
    run_experiment(config)
    print(pathlib.Path(config.out_dir) / "manifest.json")
    return 0


def _cmd_analyze(args):
    analyze_run(args.run)
    print(pathlib.Path(args.run) / "fits.json")
    return 0


def _cmd_emit(args):
    print(emit_plot_data(args.run, args.kind, out_path=args.out))
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"generate": _cmd_generate, "run": _cmd_run,
                "analyze": _cmd_analyze, "emit": _cmd_emit}
    try:
        return handlers[args.command](args)
    except (SupepsError, OSError) as e:
        record = {"error": type(e).__name__, "message": str(e)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
