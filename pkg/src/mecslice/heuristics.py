"""Constructive placement heuristics: latency-ordered greedy, random baseline and an NSP-style proxy."""

from __future__ import annotations

import random

from .model import MC, SC, CostWeights, Instance, Placement, SliceRequest
from .state import Layout, delay_feasible_pairs


def latency_order(requests) -> list[SliceRequest]:
    return sorted(requests, key=lambda r: (r.max_delay, r.bandwidth, r.id))


def marginal_cost(lay: Layout, r: SliceRequest, primary: int, backup: int, w: CostWeights) -> float | None:
    before = lay.cost(w)
    if not lay.place(r, primary, backup):
        return None
    after = lay.cost(w)
    lay.unplace(r)
    return after - before


def greedy_layout(inst: Instance, weights: CostWeights = CostWeights(), connectivity: str = MC) -> Layout:
    lay = Layout(inst, connectivity)
    for r in latency_order(inst.requests):
        best = None
        for p, b in delay_feasible_pairs(inst, r, connectivity):
            delta = marginal_cost(lay, r, p, b, weights)
            if delta is not None and (best is None or (delta, p, b) < best):
                best = (delta, p, b)
        if best is None:
            lay.rejected.append(r.id)
        else:
            lay.place(r, best[1], best[2])
    return lay


def solve_greedy(inst: Instance, weights: CostWeights = CostWeights(), seed: int | None = None) -> Placement:
    """Serve the tightest latency budgets first, each at its cheapest MEC pair given what is already on.

    The result does not depend on ``seed``; it is accepted for a uniform solver signature.
    """
    return greedy_layout(inst, weights).to_placement("greedy")


def solve_baseline(inst: Instance, weights: CostWeights = CostWeights(), seed: int = 0) -> Placement:
    """Single-connectivity random first-fit: random request order, random MEC scan, first feasible pair."""
    rng = random.Random(seed)
    lay = Layout(inst, SC)
    reqs = list(inst.requests)
    rng.shuffle(reqs)
    for r in reqs:
        order = list(range(len(inst.sites)))
        rng.shuffle(order)
        placed = False
        for p in order:
            for b in order:
                if p != b and lay.reachable(r, "primary", p) and lay.reachable(r, "backup", b) and lay.place(r, p, b):
                    placed = True
                    break
            if placed:
                break
        if not placed:
            lay.rejected.append(r.id)
    return lay.to_placement("baseline")


def solve_nsp_proxy(inst: Instance, weights: CostWeights = CostWeights(), seed: int = 0) -> Placement:
    """Dedicated protection under single connectivity.

    Requests are taken in arrival order. Each primary goes to the MEC closest
    to the master base station that can also hold a server-disjoint backup
    (backup method 2); when none can, the backup falls back to the nearest
    other reachable MEC. Backup capacity is dedicated: a server holds either
    primaries or idle backups, never both. ``seed`` breaks ties between
    equidistant facilities.
    """
    rng = random.Random(seed)
    lay = Layout(inst, SC, anti_affinity="server")
    jitter = [rng.random() for _ in inst.sites]
    role_of: dict[tuple[int, int], str] = {}

    def put(r, role, m):
        other = "backup" if role == "primary" else "primary"
        excl = {s for (mm, s), rl in role_of.items() if mm == m and rl == other}
        servers = lay.fits(r, role, m, excl)
        if servers is None:
            return False
        lay.add(r, role, m, servers)
        for s in servers:
            role_of[m, s] = role
        return True

    def place(r, p, b):
        snapshot = dict(role_of)
        if put(r, "primary", p) and put(r, "backup", b):
            return True
        lay.unplace(r)
        role_of.clear()
        role_of.update(snapshot)
        return False

    for r in sorted(inst.requests, key=lambda r: r.id):
        near = sorted(range(len(inst.sites)), key=lambda m: (inst.delay(r.master, m), jitter[m], m))
        near = [m for m in near if lay.reachable(r, "primary", m)]
        placed = any(place(r, p, b) for p in near for b in near if p != b)
        if not placed:
            placed = any(place(r, m, m) for m in near)
        if not placed:
            lay.rejected.append(r.id)
    return lay.to_placement("nsp-proxy")
