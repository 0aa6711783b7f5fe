"""Exact branch-and-bound for the placement program at desk scale.

The objective splits cleanly: forwarding cost depends only on each request's
(primary, backup) MEC pair, while facility and server costs depend only on the
multiset of VNF demands that end up in each MEC. The search therefore runs
over MEC subsets (cheapest lower bound first) and, inside each subset, over
per-request pairs; leaves close the server count with exact bin packing.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

from .model import (MC, SC, CostWeights, Instance, Placement, RequestPlacement, SlicePlacement,
                    request_traffic, total_cost, within_budget)
from .packing import min_servers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExactConfig:
    mode: str = MC
    node_cap: int = 2_000_000
    tolerance: float = 0.0
    reject_infeasible: bool = False

    def __post_init__(self):
        if self.mode not in (MC, SC):
            raise ValueError(f"mode must be {MC!r} or {SC!r}")
        if self.node_cap < 1:
            raise ValueError("node_cap must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass
class ExactResult:
    placement: Placement
    cost: float
    optimal: bool
    nodes: int
    trace: list[str] = field(default_factory=list)


class InfeasibleInstance(ValueError):
    def __init__(self, reasons: list[tuple[int, int, str]]):
        self.reasons = reasons
        super().__init__("; ".join(f"request {r}: constraint ({c}) {msg}" for r, c, msg in reasons))


class _Budget(Exception):
    pass


def _request_pairs(inst: Instance, r, mode: str):
    """Candidate pairs for one request plus a reason when there are none."""
    def ok(role, m):
        site = inst.sites[m]
        return within_budget(r, r.anchor(role, mode), site, inst.delays)

    prim = [m for m in range(len(inst.sites)) if ok("primary", m)]
    back = [m for m in range(len(inst.sites)) if ok("backup", m)]
    if not prim:
        return [], (15, "no MEC within the latency budget of the primary slice")
    if not back:
        return [], (16, "no MEC within the latency budget of the backup slice")
    bw_ok = {m for m in range(len(inst.sites)) if r.bandwidth <= inst.sites[m].bandwidth}
    fit_ok = {m for m in range(len(inst.sites)) if min_servers(r.demands, inst.sites[m].servers) is not None}
    pairs = [(p, b) for p in prim for b in back if p != b]
    if not pairs:
        return [], (14, "primary and backup can only reach the same MEC")
    pairs = [(p, b) for p, b in pairs if p in bw_ok and b in bw_ok]
    if not pairs:
        return [], (19, "slice bandwidth exceeds every reachable facility")
    pairs = [(p, b) for p, b in pairs if p in fit_ok and b in fit_ok]
    if not pairs:
        return [], (11, "slice does not fit on the servers of any reachable facility")
    return pairs, None


def solve_exact(inst: Instance, weights: CostWeights = CostWeights(), cfg: ExactConfig = ExactConfig(),
                verbose: bool = False) -> ExactResult:
    mode = cfg.mode
    trace: list[str] = []

    def emit(line):
        if verbose:
            trace.append(line)
        log.debug(line)

    cands = {}
    reasons = []
    for r in inst.requests:
        pairs, why = _request_pairs(inst, r, mode)
        if why is not None:
            reasons.append((r.id, *why))
        else:
            cands[r.id] = pairs
    if reasons and not cfg.reject_infeasible:
        raise InfeasibleInstance(reasons)
    rejected = tuple(rid for rid, _, _ in reasons)
    reqs = [r for r in inst.requests if r.id in cands]
    method = "exact" if mode == MC else "exact-sc"

    def finish(assign, optimal, nodes):
        p = _materialize(inst, reqs, assign, rejected, mode, method)
        cost = total_cost(p, inst, weights).total
        emit(f"done nodes={nodes} optimal={optimal} cost={cost!r}")
        return ExactResult(p, cost, optimal, nodes, trace)

    if not reqs:
        return finish({}, True, 0)

    tc = {r.id: {pb: request_traffic(inst, r, *pb, mode) for pb in cands[r.id]} for r in reqs}
    per_mec, per_server, per_tc = weights.per_mec, weights.per_server, weights.per_traffic
    caps = [max(s.servers) for s in inst.sites]
    n_servers = [len(s.servers) for s in inst.sites]
    total_demand = 2 * sum(sum(r.demands) for r in reqs)

    subsets = []
    for size in range(2, len(inst.sites) + 1):
        for U in itertools.combinations(range(len(inst.sites)), size):
            Uset = set(U)
            inside = {}
            for r in reqs:
                pairs = [pb for pb in cands[r.id] if pb[0] in Uset and pb[1] in Uset]
                if not pairs:
                    break
                inside[r.id] = sorted(pairs, key=lambda pb: (tc[r.id][pb], pb))
            else:
                if size > 2 * len(reqs):
                    continue
                min_tc = sum(tc[rid][pairs[0]] for rid, pairs in inside.items())
                lb = (per_mec * size + per_server * max(size, math.ceil(total_demand / max(caps[m] for m in U)))
                      + per_tc * min_tc)
                subsets.append((lb, U, inside))
    subsets.sort(key=lambda t: (t[0], t[1]))
    emit(f"subsets={len(subsets)} requests={len(reqs)} mode={mode}")

    best = [math.inf, None, None]  # cost, key, assignment
    nodes = [0]
    slack = cfg.tolerance

    def prune(bound):
        return bound > best[0] - slack * abs(best[0]) if best[0] < math.inf else False

    def search(U, inside):
        order = sorted(reqs, key=lambda r: (len(inside[r.id]), -sum(r.demands), r.id))
        n = len(order)
        suffix = [0.0] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] + tc[order[i].id][inside[order[i].id][0]]
        load = {m: 0 for m in U}
        slices = {m: 0 for m in U}
        bw = {m: 0.0 for m in U}
        items = {m: [] for m in U}
        assign = {}
        fixed = per_mec * len(U)

        def dfs(i, tc_acc):
            nodes[0] += 1
            if nodes[0] > cfg.node_cap:
                raise _Budget
            unused = sum(1 for m in U if slices[m] == 0)
            if unused > 2 * (n - i):
                return
            servers_lb = sum(max(1, -(-load[m] // caps[m])) for m in U)
            if prune(fixed + per_server * servers_lb + per_tc * (tc_acc + suffix[i])):
                return
            if i == n:
                leaf(tc_acc)
                return
            r = order[i]
            dem = sum(r.demands)
            for p, b in inside[r.id]:
                if bw[p] + r.bandwidth > inst.sites[p].bandwidth + 1e-9:
                    continue
                if bw[b] + r.bandwidth > inst.sites[b].bandwidth + 1e-9:
                    continue
                if -(-(load[p] + dem) // caps[p]) > n_servers[p] or -(-(load[b] + dem) // caps[b]) > n_servers[b]:
                    continue
                for m in (p, b):
                    load[m] += dem
                    slices[m] += 1
                    bw[m] += r.bandwidth
                    items[m].extend(r.demands)
                assign[r.id] = (p, b)
                dfs(i + 1, tc_acc + tc[r.id][(p, b)])
                del assign[r.id]
                for m in (b, p):
                    load[m] -= dem
                    slices[m] -= 1
                    bw[m] -= r.bandwidth
                    del items[m][-len(r.demands):]

        def leaf(tc_acc):
            count = 0
            for m in U:
                packed = min_servers(tuple(sorted(items[m], reverse=True)), inst.sites[m].servers)
                if packed is None:
                    return
                count += packed[0]
            cost = fixed + per_server * count + per_tc * tc_acc
            key = tuple(assign[r.id] for r in reqs)
            if best[1] is None or (cost, key) < (best[0], best[1]):
                best[:] = [cost, key, dict(assign)]
                emit(f"node={nodes[0]} subset={list(U)} incumbent={cost!r}")

        dfs(0, 0.0)

    optimal = True
    try:
        for lb, U, inside in subsets:
            if prune(lb):
                break
            search(U, inside)
    except _Budget:
        optimal = False
        emit(f"node cap {cfg.node_cap} reached")
    if best[2] is None:
        if optimal:
            raise InfeasibleInstance([(r.id, 11, "no joint assignment satisfies capacity and bandwidth")
                                      for r in reqs])
        raise InfeasibleInstance([(-1, 0, f"node cap {cfg.node_cap} reached before any feasible placement")])
    return finish(best[2], optimal, nodes[0])


def _materialize(inst, reqs, assign, rejected, mode, method) -> Placement:
    """Turn an MEC-pair assignment into per-VNF server slots with minimal servers per MEC."""
    per_mec: dict[int, list[tuple[int, str, int, int]]] = {}
    for r in reqs:
        p, b = assign[r.id]
        for role, m in (("primary", p), ("backup", b)):
            for v, vnf in enumerate(r.vnfs):
                per_mec.setdefault(m, []).append((r.id, role, v, vnf.vcpu))
    slots: dict[tuple[int, str], list[int]] = {(r.id, role): [0] * len(r.vnfs) for r in reqs for role in ("primary", "backup")}
    for m, entries in per_mec.items():
        packed = min_servers(tuple(e[3] for e in entries), inst.sites[m].servers)
        for (rid, role, v, _), s in zip(entries, packed[1]):
            slots[rid, role][v] = s
    out = tuple(
        RequestPlacement(r.id, SlicePlacement(assign[r.id][0], tuple(slots[r.id, "primary"])),
                         SlicePlacement(assign[r.id][1], tuple(slots[r.id, "backup"])))
        for r in reqs
    )
    return Placement(out, rejected, mode, "mec", method)
