"""Method sweeps over request counts and seeds, with per-figure CSV series."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .evaluation import BACKUP_MODES, availability_curve, busiest_mec, resource_usage, throughput
from .exact import ExactConfig, InfeasibleInstance, solve_exact
from .ga import GaConfig, solve_mga
from .heuristics import solve_baseline, solve_greedy, solve_nsp_proxy
from .model import (MC, SC, CostWeights, Instance, Placement, build_instance, dump_json,
                    instance_to_dict, total_cost)
from .state import delay_feasible_pairs
from .topology import DEFAULT_US_PER_KM, all_pairs_delay, germany50, load_sndlib

log = logging.getLogger(__name__)

METHODS = ("exact", "exact-sc", "mga", "greedy", "nsp-proxy", "baseline")
EXACT_METHODS = ("exact", "exact-sc")

RUN_COLUMNS = ["requests", "seed", "method", "status", "admitted", "rejected", "dropped", "mc_cost",
               "sc_cost", "tc_cost", "total_cost", "mecs", "servers", "throughput_aggregate",
               "throughput_duplicate", "optimal"]
FIG_COLUMNS = {
    "fig7.csv": ["requests", "method", "mean_total_cost", "std_total_cost", "runs"],
    "fig8.csv": ["requests", "method", "mean_mecs", "std_mecs", "runs"],
    "fig9.csv": ["requests", "method", "mean_servers", "std_servers", "runs"],
    "fig10.csv": ["backup_mode", "failed_servers", "mean_availability", "runs"],
    "fig11.csv": ["requests", "method", "mean_throughput_mbps", "std_throughput_mbps", "runs"],
}


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    name: str = "default"
    topology: str | None = None  # SNDlib native file; None selects bundled Germany50
    mec_sites: int = 7
    site_seed: int = 42
    servers_per_mec: int = 10
    server_capacity: int = 56
    mec_bandwidth: float = 10_000.0
    us_per_km: float = DEFAULT_US_PER_KM
    weights: dict = field(default_factory=dict)
    request_counts: list = field(default_factory=lambda: [20, 40, 60, 80, 100])
    methods: list = field(default_factory=lambda: list(METHODS))
    seeds: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    ga: dict = field(default_factory=dict)
    exact_max_requests: int = 8
    exact_node_cap: int = 2_000_000
    availability_method: str = "mga"
    availability_modes: list = field(default_factory=lambda: list(BACKUP_MODES))
    availability_trials: int = 10_000
    common_admission: bool = True
    save_placements: bool = True
    output_dir: str = "out"

    def validate(self) -> None:
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ExperimentError(f"unknown method(s): {', '.join(unknown)}; known: {', '.join(METHODS)}")
        if not self.seeds:
            raise ExperimentError("seeds must be non-empty")
        if not self.request_counts or any(n < 0 for n in self.request_counts):
            raise ExperimentError("request_counts must be non-negative and non-empty")
        CostWeights(**self.weights)
        GaConfig(**self.ga)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ExperimentError(f"unknown config key(s): {', '.join(sorted(extra))}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ExperimentError(f"cannot read config {path}: {exc}") from exc

    def cost_weights(self) -> CostWeights:
        return CostWeights(**self.weights)


def load_network(cfg: ExperimentConfig):
    if cfg.topology is None:
        return germany50(cfg.us_per_km)
    try:
        return load_sndlib(cfg.topology, cfg.us_per_km)
    except OSError as exc:
        raise ExperimentError(f"cannot read topology {cfg.topology}: {exc}") from exc


def admissible(inst: Instance, modes=(MC, SC)) -> tuple[Instance, int]:
    """Drop requests without a latency-feasible MEC pair under any of ``modes``."""
    keep = tuple(r for r in inst.requests if all(delay_feasible_pairs(inst, r, m) for m in modes))
    return replace(inst, requests=keep), len(inst.requests) - len(keep)


def run_method(method: str, inst: Instance, weights: CostWeights, seed: int, ga: GaConfig | None = None,
               exact_node_cap: int = 2_000_000, verbose: bool = False) -> tuple[Placement, dict]:
    """Solve one instance with one method; returns the placement and method-specific extras."""
    extra: dict = {}
    if method in EXACT_METHODS:
        cfg = ExactConfig(mode=MC if method == "exact" else SC, node_cap=exact_node_cap, reject_infeasible=True)
        res = solve_exact(inst, weights, cfg, verbose=verbose)
        extra.update(optimal=res.optimal, nodes=res.nodes, trace=res.trace)
        return res.placement, extra
    if method == "mga":
        res = solve_mga(inst, weights, replace(ga or GaConfig(), seed=seed))
        extra["history"] = res.history
        return res.placement, extra
    solver = {"greedy": solve_greedy, "nsp-proxy": solve_nsp_proxy, "baseline": solve_baseline}.get(method)
    if solver is None:
        raise ExperimentError(f"unknown method {method!r}")
    return solver(inst, weights, seed), extra


def _row(n, seed, method, status, dropped, p=None, inst=None, weights=None, optimal=""):
    row = dict.fromkeys(RUN_COLUMNS, "")
    row.update(requests=n, seed=seed, method=method, status=status, dropped=dropped)
    if p is not None:
        c = total_cost(p, inst, weights)
        mecs, servers = resource_usage(p)
        row.update(admitted=len(p.assignments), rejected=len(p.rejected), mc_cost=repr(c.mc),
                   sc_cost=repr(c.sc), tc_cost=repr(c.tc), total_cost=repr(c.total), mecs=mecs,
                   servers=servers, throughput_aggregate=repr(throughput(p, inst, "aggregate")[0]),
                   throughput_duplicate=repr(throughput(p, inst, "duplicate")[0]), optimal=optimal)
    return row


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Run the sweep and write runs.csv, timing.csv, fig7..fig11.csv and meta.json.

    Everything except timing.csv is a pure function of the config.
    """
    cfg.validate()
    weights = cfg.cost_weights()
    ga = GaConfig(**cfg.ga)
    net = load_network(cfg)
    delays = all_pairs_delay(net)
    out = Path(out_dir or cfg.output_dir) / cfg.name
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.save_placements:
            (out / "placements").mkdir(exist_ok=True)
            (out / "instances").mkdir(exist_ok=True)
    except OSError as exc:
        raise ExperimentError(f"cannot create output directory {out}: {exc}") from exc

    rows, timing, avail = [], [], []
    sites = None
    for n in cfg.request_counts:
        for seed in cfg.seeds:
            inst = build_instance(net, cfg.mec_sites, n, seed, site_seed=cfg.site_seed,
                                  servers_per_mec=cfg.servers_per_mec, capacity=cfg.server_capacity,
                                  bandwidth=cfg.mec_bandwidth, delays=delays)
            sites = sites or [s.host for s in inst.sites]
            dropped = 0
            if cfg.common_admission:
                inst, dropped = admissible(inst)
            tag = f"n{n}_s{seed}"
            if cfg.save_placements:
                dump_json(instance_to_dict(inst), out / "instances" / f"{tag}.json")
            for method in cfg.methods:
                if method in EXACT_METHODS and n > cfg.exact_max_requests:
                    rows.append(_row(n, seed, method, "skipped: scale", dropped))
                    continue
                t0 = time.perf_counter()
                try:
                    p, extra = run_method(method, inst, weights, seed, ga, cfg.exact_node_cap)
                except InfeasibleInstance as exc:
                    rows.append(_row(n, seed, method, f"infeasible: {exc}", dropped))
                    continue
                elapsed = time.perf_counter() - t0
                log.info("n=%d seed=%d %s %.3fs", n, seed, method, elapsed)
                timing.append({"requests": n, "seed": seed, "method": method, "seconds": elapsed})
                rows.append(_row(n, seed, method, "ok", dropped, p, inst, weights, extra.get("optimal", "")))
                if cfg.save_placements:
                    dump_json(p.to_dict(), out / "placements" / f"{tag}_{method}.json")
                if method == cfg.availability_method:
                    mec = busiest_mec(p)
                    if mec is not None:
                        for mode, k, value in availability_curve(p, inst, mec, cfg.availability_modes,
                                                                 cfg.availability_trials, seed):
                            avail.append({"requests": n, "seed": seed, "backup_mode": mode,
                                          "failed_servers": k, "availability": value})

    files = {"runs.csv": _csv(RUN_COLUMNS, rows)}
    files.update(emit_plot_data(rows, avail))
    files["timing.csv"] = _csv(["requests", "seed", "method", "seconds"], timing)
    files["table2.csv"] = _timing_table(timing)
    meta = {"config": asdict(cfg), "network": net.name, "nodes": len(net.nodes), "links": len(net.links),
            "mec_sites": sites, "methods": cfg.methods}
    try:
        for name, text in files.items():
            (out / name).write_text(text)
        (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise ExperimentError(f"cannot write results to {out}: {exc}") from exc
    return out


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _mean_std(values):
    return statistics.fmean(values), (statistics.stdev(values) if len(values) > 1 else 0.0)


def emit_plot_data(rows, avail_rows=()) -> dict[str, str]:
    """One CSV per figure: cost, MEC count, server count, availability and throughput series."""
    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        raise ExperimentError("no successful runs to aggregate")
    groups: dict[tuple, list] = {}
    for r in ok:
        groups.setdefault((int(r["requests"]), r["method"]), []).append(r)
    methods = list(dict.fromkeys(r["method"] for r in ok))
    keys = sorted(groups, key=lambda k: (k[0], methods.index(k[1])))
    out = {}
    for fname, metric in (("fig7.csv", "total_cost"), ("fig8.csv", "mecs"), ("fig9.csv", "servers"),
                          ("fig11.csv", "throughput_aggregate")):
        series = []
        for n, m in keys:
            mean, std = _mean_std([float(r[metric]) for r in groups[n, m]])
            series.append(dict(zip(FIG_COLUMNS[fname], (n, m, repr(mean), repr(std), len(groups[n, m])))))
        out[fname] = _csv(FIG_COLUMNS[fname], series)
    agg: dict[tuple, list] = {}
    for a in avail_rows:
        agg.setdefault((a["backup_mode"], int(a["failed_servers"])), []).append(float(a["availability"]))
    order = {m: i for i, m in enumerate(BACKUP_MODES)}
    series = [dict(zip(FIG_COLUMNS["fig10.csv"], (mode, k, repr(statistics.fmean(v)), len(v))))
              for (mode, k), v in sorted(agg.items(), key=lambda kv: (order.get(kv[0][0], 99), kv[0][1]))]
    out["fig10.csv"] = _csv(FIG_COLUMNS["fig10.csv"], series)
    return dict(sorted(out.items()))


def _timing_table(timing) -> str:
    groups: dict[tuple, list] = {}
    for t in timing:
        groups.setdefault((t["method"], t["requests"]), []).append(t["seconds"])
    rows = [{"method": m, "requests": n, "mean_seconds": f"{statistics.fmean(v):.4f}", "runs": len(v)}
            for (m, n), v in groups.items()]
    return _csv(["method", "requests", "mean_seconds", "runs"], rows)


def fit_power_law(xs, ys) -> tuple[float, float]:
    """Least-squares fit of y = a * x**b in log space; returns (a, b)."""
    import numpy as np

    b, log_a = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(np.exp(log_a)), float(b)
