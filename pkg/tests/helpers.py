"""Small instance builders and independent brute-force oracles shared by the tests."""

import itertools
import random
from functools import lru_cache

from mecslice.model import (MC, SC, SERVICE_TYPES, Instance, MecSite, Placement, RequestPlacement,
                            ServiceType, SlicePlacement, SliceRequest, Vnf)
from mecslice.topology import DelayMatrix


def dm(pairs):
    return DelayMatrix.from_pairs(pairs)


def req(rid, vcpus, master="B0", secondary="B1", bw=100.0, max_delay=10.0):
    return SliceRequest(rid, tuple(Vnf(c) for c in vcpus), master, secondary, ServiceType("t", bw, max_delay))


def full_delays(hosts, stations, rng, step=0.125, top=16):
    """Dyadic delays (multiples of 1/8 ms) so every cost sum is exact in floating point."""
    names = list(hosts) + list(stations)
    pairs = {}
    for a, b in itertools.combinations(names, 2):
        pairs[a, b] = step * rng.randint(1, top)
    return dm(pairs)


def random_small_instance(seed, n_req=None, n_mec=None, servers=2, cap=8, bandwidth=None):
    rng = random.Random(seed)
    n_mec = n_mec or rng.randint(2, 3)
    n_req = n_req if n_req is not None else rng.randint(1, 4)
    hosts = [f"H{i}" for i in range(n_mec)]
    stations = [f"B{i}" for i in range(4)]
    delays = full_delays(hosts, stations, rng)
    bw_cap = bandwidth or rng.choice([500.0, 1000.0, 10_000.0])
    sites = tuple(MecSite(i, h, (cap,) * servers, bw_cap) for i, h in enumerate(hosts))
    reqs = []
    for i in range(n_req):
        master, secondary = rng.sample(stations, 2)
        service = rng.choice(SERVICE_TYPES)
        vnfs = tuple(Vnf(rng.randint(1, 4)) for _ in range(rng.randint(1, 3)))
        reqs.append(SliceRequest(i, vnfs, master, secondary, service))
    return Instance(sites, tuple(reqs), delays)


# brute force --------------------------------------------------------------

@lru_cache(maxsize=None)
def _min_servers_brute(items, n_servers, cap):
    """Fewest servers over every item-to-server assignment; None if nothing fits."""
    best = None
    for assign in itertools.product(range(n_servers), repeat=len(items)):
        loads = [0] * n_servers
        for d, s in zip(items, assign):
            loads[s] += d
        if max(loads, default=0) <= cap:
            used = sum(1 for l in loads if l)
            best = used if best is None else min(best, used)
    return best


def _reach(inst, r, anchor, m):
    site = inst.sites[m]
    return inst.delays[anchor, site.host] + sum(v.processing_delay for v in r.vnfs) <= r.max_delay + 1e-9


def brute_force(inst, weights, mode=MC):
    """Minimum total cost by enumerating every (primary, backup) MEC choice per request.

    Requests with no latency-feasible pair are rejected. Returns (cost, rejected) or
    (None, rejected) when the remaining requests cannot be placed jointly.
    """
    n = len(inst.sites)
    options, rejected = [], []
    keep = []
    for r in inst.requests:
        b_anchor = r.master if mode == SC else r.secondary
        opts = [(p, b) for p in range(n) for b in range(n)
                if p != b and _reach(inst, r, r.master, p) and _reach(inst, r, b_anchor, b)
                and r.bandwidth <= inst.sites[p].bandwidth and r.bandwidth <= inst.sites[b].bandwidth]
        if opts:
            options.append(opts)
            keep.append(r)
        else:
            rejected.append(r.id)
    best = None
    for choice in itertools.product(*options):
        items = {m: [] for m in range(n)}
        bw = [0.0] * n
        tc = 0.0
        for r, (p, b) in zip(keep, choice):
            b_anchor = r.master if mode == SC else r.secondary
            items[p].extend(r.demands)
            items[b].extend(r.demands)
            bw[p] += r.bandwidth
            bw[b] += r.bandwidth
            tc += (inst.delays[r.master, inst.sites[p].host] + inst.delays[b_anchor, inst.sites[b].host]) * r.bandwidth
        if any(bw[m] > inst.sites[m].bandwidth + 1e-9 for m in range(n)):
            continue
        servers = 0
        ok = True
        for m in range(n):
            if items[m]:
                k = _min_servers_brute(tuple(sorted(items[m])), len(inst.sites[m].servers), inst.sites[m].servers[0])
                if k is None:
                    ok = False
                    break
                servers += k
        if not ok:
            continue
        mecs = sum(1 for m in range(n) if items[m])
        cost = (weights.alpha1 * weights.c_mc * mecs + weights.alpha2 * weights.c_sc * servers
                + weights.alpha3 * weights.c_tc * tc)
        best = cost if best is None else min(best, cost)
    return best, rejected


def naive_violations(p, inst):
    """Straightforward re-implementation of the constraint set; returns the set of violated constraint numbers."""
    bad = set()
    reqs = {r.id: r for r in inst.requests}
    placed = [a.request for a in p.assignments]
    for rid in reqs:
        if placed.count(rid) + list(p.rejected).count(rid) != 1:
            bad.add(12)
    for rid in placed + list(p.rejected):
        if rid not in reqs:
            bad.add(12)
    load = {}
    bw = {}
    for a in p.assignments:
        r = reqs.get(a.request)
        if r is None:
            continue
        for role, sl in (("primary", a.primary), ("backup", a.backup)):
            if sl.mec < 0 or sl.mec >= len(inst.sites):
                bad.add(12 if role == "primary" else 13)
                continue
            site = inst.sites[sl.mec]
            anchor = r.master if role == "primary" or p.connectivity == SC else r.secondary
            if inst.delays[anchor, site.host] + sum(v.processing_delay for v in r.vnfs) > r.max_delay + 1e-9:
                bad.add(15 if role == "primary" else 16)
            if len(sl.servers) != len(r.vnfs) or any(s < 0 or s >= len(site.servers) for s in sl.servers):
                bad.add(17 if role == "primary" else 18)
                continue
            for v, s in zip(r.vnfs, sl.servers):
                load[sl.mec, s] = load.get((sl.mec, s), 0) + v.vcpu
            bw[sl.mec] = bw.get(sl.mec, 0) + r.bandwidth
        # anti-affinity is only judged between two well-formed slices
        well_formed = all(0 <= sl.mec < len(inst.sites) and len(sl.servers) == len(r.vnfs)
                          and all(0 <= s < len(inst.sites[sl.mec].servers) for s in sl.servers)
                          for sl in (a.primary, a.backup))
        if well_formed and a.primary.mec == a.backup.mec:
            if p.anti_affinity == "mec" or set(a.primary.servers) & set(a.backup.servers):
                bad.add(14)
    for (m, s), l in load.items():
        if l > inst.sites[m].servers[s]:
            bad.add(11)
    for m, b in bw.items():
        if b > inst.sites[m].bandwidth + 1e-9:
            bad.add(19)
    return bad


def placement(pairs, connectivity=MC, rejected=(), anti_affinity="mec"):
    """pairs: {rid: ((mec, servers), (mec, servers))}"""
    return Placement(tuple(RequestPlacement(rid, SlicePlacement(pm, tuple(ps)), SlicePlacement(bm, tuple(bs)))
                           for rid, ((pm, ps), (bm, bs)) in pairs.items()),
                     tuple(rejected), connectivity, anti_affinity)
