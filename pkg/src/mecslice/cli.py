"""Command line entry point: ``mecslice solve|sweep|validate|topo``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .evaluation import evaluate
from .experiment import METHODS, ExperimentConfig, ExperimentError, run_experiment, run_method
from .exact import InfeasibleInstance
from .ga import GaConfig, history_csv
from .model import (CostWeights, Placement, build_instance, check_feasibility, dump_json, instance_from_dict,
                    instance_to_dict)
from .topology import TopologyError, all_pairs_delay, closeness, germany50, load_sndlib, select_mec_sites


def _network(path):
    return germany50() if path is None else load_sndlib(path)


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.topology is not None:
        cfg.topology = args.topology
    if args.mec_sites is not None:
        cfg.mec_sites = args.mec_sites
    if getattr(args, "requests", None):
        cfg.request_counts = list(args.requests)
    if getattr(args, "method", None):
        cfg.methods = list(args.method)
    if getattr(args, "seed", None):
        cfg.seeds = list(args.seed)
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def cmd_solve(args) -> int:
    cfg = _config(args)
    weights = cfg.cost_weights()
    if args.instance:
        inst = instance_from_dict(json.loads(Path(args.instance).read_text()))
    else:
        net = _network(cfg.topology)
        inst = build_instance(net, cfg.mec_sites, cfg.request_counts[0], cfg.seeds[0], site_seed=cfg.site_seed,
                              servers_per_mec=cfg.servers_per_mec, capacity=cfg.server_capacity,
                              bandwidth=cfg.mec_bandwidth)
    method = cfg.methods[0]
    p, extra = run_method(method, inst, weights, cfg.seeds[0], GaConfig(**cfg.ga), cfg.exact_node_cap,
                          verbose=args.verbose)
    for line in extra.get("trace", ()):
        print(line, file=sys.stderr)
    report = evaluate(p, inst, weights)
    doc = {"report": report.to_dict(), "placement": p.to_dict()}
    if "optimal" in extra:
        doc["optimal"] = extra["optimal"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(doc, out / "solution.json")
        dump_json(instance_to_dict(inst), out / "instance.json")
        if "history" in extra:
            (out / "history.csv").write_text(history_csv(extra["history"]))
    else:
        print(json.dumps(doc, indent=2))
    if args.history and "history" in extra:
        sys.stdout.write(history_csv(extra["history"]))
    return 0


def cmd_sweep(args) -> int:
    out = run_experiment(_config(args))
    print(out)
    return 0


def cmd_validate(args) -> int:
    inst = instance_from_dict(json.loads(Path(args.instance).read_text()))
    doc = json.loads(Path(args.placement).read_text())
    p = Placement.from_dict(doc.get("placement", doc))
    violations = check_feasibility(p, inst)
    for v in violations:
        print(f"({v.constraint}) {v.message}")
    if violations:
        return 1
    print(f"feasible: {len(p.assignments)} admitted, {len(p.rejected)} rejected")
    return 0


def cmd_topo(args) -> int:
    net = _network(args.topology)
    delays = all_pairs_delay(net)
    info = {"name": net.name, "nodes": len(net.nodes), "links": len(net.links)}
    if args.mec_sites:
        info["mec_sites"] = select_mec_sites(net, args.mec_sites, seed=args.site_seed, delays=delays)
        close = closeness(delays)
        info["closeness"] = {n: float(close[net.index(n)]) for n in info["mec_sites"]}
    if args.delays:
        info["delays"] = delays.to_dict()
    print(json.dumps(info, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--topology", help="SNDlib native topology file (default: bundled Germany50)")
    common.add_argument("--mec-sites", type=int, help="number of MEC facilities k")
    common.add_argument("--verbose", "-v", action="store_true")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", help="experiment config JSON")
    run.add_argument("--out", help="output directory")
    run.add_argument("--requests", type=int, nargs="+", help="request count(s)")
    run.add_argument("--method", nargs="+", choices=METHODS)
    run.add_argument("--seed", type=int, nargs="+")

    ap = argparse.ArgumentParser(prog="mecslice", description="Resilient network slice placement on MEC servers")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common, run], help="solve one instance with one method")
    s.add_argument("--instance", help="instance JSON instead of a generated one")
    s.add_argument("--history", action="store_true", help="print the MGA best-cost history as CSV")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("sweep", parents=[common, run], help="run a full experiment")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("validate", parents=[common], help="feasibility-check a placement file")
    s.add_argument("instance")
    s.add_argument("placement")
    s.set_defaults(func=cmd_validate)
    s = sub.add_parser("topo", parents=[common], help="inspect a topology and select MEC sites")
    s.add_argument("--site-seed", type=int, default=42)
    s.add_argument("--delays", action="store_true", help="include the all-pairs delay matrix")
    s.set_defaults(func=cmd_topo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ExperimentError, TopologyError, InfeasibleInstance, ValueError, KeyError, OSError) as exc:
        print(f"mecslice: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
