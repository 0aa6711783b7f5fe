"""Problem instances, placements, the cost objective and the constraint checker."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

from .topology import DelayMatrix, Network, all_pairs_delay, select_mec_sites

# slack for float comparisons against delay and bandwidth budgets
EPS = 1e-9

MC = "mc"
SC = "sc"


@dataclass(frozen=True)
class ServiceType:
    name: str
    bandwidth: float  # Mbps
    max_delay: float  # ms

    def __post_init__(self):
        if self.bandwidth <= 0 or self.max_delay <= 0:
            raise ValueError(f"service {self.name}: bandwidth and max_delay must be positive")


SERVICE_TYPES = (
    ServiceType("AR/VR", 200.0, 2.0),
    ServiceType("V2X", 100.0, 3.0),
    ServiceType("e-health", 50.0, 5.0),
    ServiceType("8K TV and Gaming", 250.0, 10.0),
)

VNF_PROCESSING_DELAY = 0.05  # ms per VNF


@dataclass(frozen=True)
class Vnf:
    vcpu: int
    processing_delay: float = VNF_PROCESSING_DELAY

    def __post_init__(self):
        if self.vcpu < 1 or self.processing_delay < 0:
            raise ValueError(f"invalid VNF {self}")


@dataclass(frozen=True)
class SliceRequest:
    id: int
    vnfs: tuple[Vnf, ...]
    master: str
    secondary: str
    service: ServiceType

    def __post_init__(self):
        if self.master == self.secondary:
            raise ValueError(f"request {self.id}: master and secondary base station must differ")
        if not self.vnfs:
            raise ValueError(f"request {self.id}: empty VNF list")

    @property
    def bandwidth(self) -> float:
        return self.service.bandwidth

    @property
    def max_delay(self) -> float:
        return self.service.max_delay

    @property
    def processing_delay(self) -> float:
        return sum(v.processing_delay for v in self.vnfs)

    @property
    def demands(self) -> tuple[int, ...]:
        return tuple(v.vcpu for v in self.vnfs)

    def anchor(self, role: str, connectivity: str = MC) -> str:
        """Base station through which the given slice ('primary'/'backup') is reached."""
        if role == "primary" or connectivity == SC:
            return self.master
        return self.secondary


@dataclass(frozen=True)
class MecSite:
    id: int
    host: str
    servers: tuple[int, ...] = (56,) * 10  # vCPU capacity per server
    bandwidth: float = 10_000.0  # Mbps

    def __post_init__(self):
        if not self.servers or any(c <= 0 for c in self.servers):
            raise ValueError(f"MEC {self.id}: server capacities must be positive")
        if self.bandwidth <= 0:
            raise ValueError(f"MEC {self.id}: bandwidth must be positive")


@dataclass(frozen=True)
class CostWeights:
    c_mc: float = 100.0
    c_sc: float = 10.0
    c_tc: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0

    def __post_init__(self):
        if min(self.c_mc, self.c_sc, self.c_tc, self.alpha1, self.alpha2, self.alpha3) < 0:
            raise ValueError("cost weights must be non-negative")

    def scaled(self, factor: float) -> "CostWeights":
        return replace(self, c_mc=self.c_mc * factor, c_sc=self.c_sc * factor, c_tc=self.c_tc * factor)

    @property
    def per_mec(self) -> float:
        return self.alpha1 * self.c_mc

    @property
    def per_server(self) -> float:
        return self.alpha2 * self.c_sc

    @property
    def per_traffic(self) -> float:
        return self.alpha3 * self.c_tc


@dataclass(frozen=True)
class Instance:
    sites: tuple[MecSite, ...]
    requests: tuple[SliceRequest, ...]
    delays: DelayMatrix

    def __post_init__(self):
        for i, s in enumerate(self.sites):
            if s.id != i:
                raise ValueError("MEC site ids must equal their position")
        ids = [r.id for r in self.requests]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate request ids")
        for r in self.requests:
            for node in (r.master, r.secondary):
                if node not in self.delays:
                    raise ValueError(f"request {r.id}: node {node} missing from delay matrix")

    def request(self, rid: int) -> SliceRequest:
        for r in self.requests:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def subset(self, n: int) -> "Instance":
        return replace(self, requests=self.requests[:n])

    def delay(self, node: str, mec: int) -> float:
        return self.delays[node, self.sites[mec].host]


@dataclass(frozen=True)
class SlicePlacement:
    mec: int
    servers: tuple[int, ...]  # one server index per VNF, in request VNF order


@dataclass(frozen=True)
class RequestPlacement:
    request: int
    primary: SlicePlacement
    backup: SlicePlacement

    def slice(self, role: str) -> SlicePlacement:
        return self.primary if role == "primary" else self.backup


@dataclass(frozen=True)
class Placement:
    """A complete assignment. All BIP indicator variables are views over it.

    ``connectivity`` selects whether backups are reached through the secondary
    base station (``"mc"``) or the master (``"sc"``). ``anti_affinity`` is
    ``"mec"`` (primary and backup in different facilities) or ``"server"``
    (same facility allowed when the two slices use disjoint servers).
    """

    assignments: tuple[RequestPlacement, ...] = ()
    rejected: tuple[int, ...] = ()
    connectivity: str = MC
    anti_affinity: str = "mec"
    method: str = ""
    _by_request: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(sorted(self.assignments, key=lambda a: a.request)))
        object.__setattr__(self, "rejected", tuple(sorted(self.rejected)))
        object.__setattr__(self, "_by_request", {a.request: a for a in self.assignments})

    def __getitem__(self, rid: int) -> RequestPlacement:
        return self._by_request[rid]

    @property
    def admitted(self) -> tuple[int, ...]:
        return tuple(a.request for a in self.assignments)

    def slices(self):
        for a in self.assignments:
            yield a.request, "primary", a.primary
            yield a.request, "backup", a.backup

    # indicator views
    def q(self, m: int) -> int:
        return int(any(sl.mec == m for _, _, sl in self.slices()))

    def u(self, m: int, s: int) -> int:
        return int(any(sl.mec == m and s in sl.servers for _, _, sl in self.slices()))

    def w(self, m: int, r: int) -> int:
        a = self._by_request.get(r)
        return int(a is not None and a.primary.mec == m)

    def x(self, m: int, r: int) -> int:
        a = self._by_request.get(r)
        return int(a is not None and a.backup.mec == m)

    def y(self, m: int, s: int, r: int, v: int) -> int:
        a = self._by_request.get(r)
        return int(a is not None and a.primary.mec == m and a.primary.servers[v] == s)

    def z(self, m: int, s: int, r: int, v: int) -> int:
        a = self._by_request.get(r)
        return int(a is not None and a.backup.mec == m and a.backup.servers[v] == s)

    def used_mecs(self) -> set[int]:
        return {sl.mec for _, _, sl in self.slices()}

    def used_servers(self) -> set[tuple[int, int]]:
        return {(sl.mec, s) for _, _, sl in self.slices() for s in sl.servers}

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "connectivity": self.connectivity,
            "anti_affinity": self.anti_affinity,
            "rejected": list(self.rejected),
            "assignments": [
                {
                    "request": a.request,
                    "primary": {"mec": a.primary.mec, "servers": list(a.primary.servers)},
                    "backup": {"mec": a.backup.mec, "servers": list(a.backup.servers)},
                }
                for a in self.assignments
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Placement":
        return cls(
            assignments=tuple(
                RequestPlacement(
                    a["request"],
                    SlicePlacement(a["primary"]["mec"], tuple(a["primary"]["servers"])),
                    SlicePlacement(a["backup"]["mec"], tuple(a["backup"]["servers"])),
                )
                for a in d["assignments"]
            ),
            rejected=tuple(d.get("rejected", ())),
            connectivity=d.get("connectivity", MC),
            anti_affinity=d.get("anti_affinity", "mec"),
            method=d.get("method", ""),
        )


def e2e_delay(r: SliceRequest, attachment: str, mec: MecSite, delays: DelayMatrix) -> float:
    """Propagation from the attachment node to the facility plus VNF processing."""
    return delays[attachment, mec.host] + r.processing_delay


def within_budget(r: SliceRequest, attachment: str, mec: MecSite, delays: DelayMatrix) -> bool:
    return e2e_delay(r, attachment, mec, delays) <= r.max_delay + EPS


def request_traffic(inst: Instance, r: SliceRequest, primary: int, backup: int, connectivity: str = MC) -> float:
    """Bandwidth-weighted delay of one request's two slices, before the c_tc factor."""
    return (inst.delay(r.master, primary) + inst.delay(r.anchor("backup", connectivity), backup)) * r.bandwidth


@dataclass(frozen=True)
class Violation:
    constraint: int
    message: str
    request: int | None = None
    mec: int | None = None
    server: int | None = None

    def __str__(self):
        return f"({self.constraint}) {self.message}"


class InfeasiblePlacement(ValueError):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(str(v) for v in violations[:5]) + (" ..." if len(violations) > 5 else ""))
        self.violations = violations


@dataclass(frozen=True)
class CostBreakdown:
    mc: float
    sc: float
    tc: float
    total: float

    def as_tuple(self):
        return (self.mc, self.sc, self.tc, self.total)


def check_feasibility(p: Placement, inst: Instance) -> list[Violation]:
    """Collect every violated constraint; an empty list means the placement is feasible."""
    out: list[Violation] = []
    reqs = {r.id: r for r in inst.requests}
    n_sites = len(inst.sites)
    seen = set()
    for rid in p.rejected:
        if rid not in reqs:
            out.append(Violation(12, f"rejected request {rid} does not exist", request=rid))
        seen.add(rid)
    loads: dict[tuple[int, int], int] = {}
    bw = [0.0] * n_sites
    for a in p.assignments:
        r = reqs.get(a.request)
        if r is None:
            out.append(Violation(12, f"placement names unknown request {a.request}", request=a.request))
            continue
        if a.request in seen:
            out.append(Violation(12, f"request {r.id} placed more than once or also rejected", request=r.id))
        seen.add(a.request)
        ok = True
        for role, cnum, dnum, mnum in (("primary", 12, 15, 17), ("backup", 13, 16, 18)):
            sl = a.slice(role)
            if not 0 <= sl.mec < n_sites:
                out.append(Violation(cnum, f"request {r.id} {role} slice on unknown MEC {sl.mec}", request=r.id, mec=sl.mec))
                ok = False
                continue
            site = inst.sites[sl.mec]
            if not within_budget(r, r.anchor(role, p.connectivity), site, inst.delays):
                d = e2e_delay(r, r.anchor(role, p.connectivity), site, inst.delays)
                out.append(Violation(dnum, f"request {r.id} {role} delay {d:.4f} ms exceeds {r.max_delay} ms",
                                     request=r.id, mec=sl.mec))
            if len(sl.servers) != len(r.vnfs):
                out.append(Violation(mnum, f"request {r.id} {role} maps {len(sl.servers)} of {len(r.vnfs)} VNFs",
                                     request=r.id, mec=sl.mec))
                ok = False
                continue
            outside = [(v, s) for v, s in enumerate(sl.servers) if not 0 <= s < len(site.servers)]
            for v, s in outside:
                out.append(Violation(mnum, f"request {r.id} {role} VNF {v} on server {s} outside MEC {sl.mec}",
                                     request=r.id, mec=sl.mec, server=s))
            if outside:
                # a malformed slice contributes no load
                ok = False
                continue
            for v, s in enumerate(sl.servers):
                loads[sl.mec, s] = loads.get((sl.mec, s), 0) + r.vnfs[v].vcpu
            bw[sl.mec] += r.bandwidth
        if not ok:
            continue
        if a.primary.mec == a.backup.mec:
            if p.anti_affinity == "mec":
                out.append(Violation(14, f"request {r.id} primary and backup share MEC {a.primary.mec}",
                                     request=r.id, mec=a.primary.mec))
            elif set(a.primary.servers) & set(a.backup.servers):
                shared = sorted(set(a.primary.servers) & set(a.backup.servers))
                out.append(Violation(14, f"request {r.id} primary and backup share servers {shared} in MEC {a.primary.mec}",
                                     request=r.id, mec=a.primary.mec, server=shared[0]))
    for rid in reqs:
        if rid not in seen:
            out.append(Violation(12, f"request {rid} is neither placed nor rejected", request=rid))
    for (m, s), load in sorted(loads.items()):
        cap = inst.sites[m].servers[s]
        if load > cap:
            out.append(Violation(11, f"server {s} of MEC {m} loaded {load} > capacity {cap} vCPU", mec=m, server=s))
    for m, used in enumerate(bw):
        if used > inst.sites[m].bandwidth + EPS:
            out.append(Violation(19, f"MEC {m} bandwidth {used} > {inst.sites[m].bandwidth} Mbps", mec=m))
    for m in range(n_sites):
        active = sum(1 for (mm, _) in loads if mm == m)
        if active > len(inst.sites[m].servers) * p.q(m):
            out.append(Violation(20, f"MEC {m} has {active} active servers but is not selected", mec=m))
    return out


def cost_parts(p: Placement, inst: Instance) -> tuple[int, int, float]:
    """(MECs used, servers activated, sum of bandwidth-weighted delays)."""
    reqs = {r.id: r for r in inst.requests}
    traffic = 0.0
    for a in p.assignments:
        traffic += request_traffic(inst, reqs[a.request], a.primary.mec, a.backup.mec, p.connectivity)
    return len(p.used_mecs()), len(p.used_servers()), traffic


def total_cost(p: Placement, inst: Instance, weights: CostWeights = CostWeights(), check: bool = True) -> CostBreakdown:
    if check:
        violations = check_feasibility(p, inst)
        if violations:
            raise InfeasiblePlacement(violations)
    n_mecs, n_servers, traffic = cost_parts(p, inst)
    mc = weights.c_mc * n_mecs
    sc = weights.c_sc * n_servers
    tc = weights.c_tc * traffic
    return CostBreakdown(mc, sc, tc, weights.alpha1 * mc + weights.alpha2 * sc + weights.alpha3 * tc)


def nearest_neighbor(node: str, delays: DelayMatrix, order: list[str]) -> str:
    return min((n for n in order if n != node), key=lambda n: (delays[node, n], order.index(n)))


def generate_requests(n: int, net: Network, seed: int, delays: DelayMatrix | None = None,
                      services=SERVICE_TYPES, vnf_count=(2, 5), vcpu=(1, 4),
                      processing_delay: float = VNF_PROCESSING_DELAY) -> list[SliceRequest]:
    """Draw ``n`` slice requests with uniformly random master node and service type."""
    rng = random.Random(seed)
    delays = delays or all_pairs_delay(net)
    names = net.node_names
    out = []
    for i in range(n):
        master = rng.choice(names)
        service = rng.choice(services)
        count = rng.randint(*vnf_count)
        vnfs = tuple(Vnf(rng.randint(*vcpu), processing_delay) for _ in range(count))
        out.append(SliceRequest(i, vnfs, master, nearest_neighbor(master, delays, names), service))
    return out


def build_sites(hosts: list[str], servers_per_mec: int = 10, capacity: int = 56,
                bandwidth: float = 10_000.0) -> tuple[MecSite, ...]:
    return tuple(MecSite(i, h, (capacity,) * servers_per_mec, bandwidth) for i, h in enumerate(hosts))


def build_instance(net: Network, k: int, n_requests: int, seed: int, *, site_seed: int = 42,
                   servers_per_mec: int = 10, capacity: int = 56, bandwidth: float = 10_000.0,
                   delays: DelayMatrix | None = None) -> Instance:
    delays = delays or all_pairs_delay(net)
    hosts = select_mec_sites(net, k, seed=site_seed, delays=delays)
    sites = build_sites(hosts, servers_per_mec, capacity, bandwidth)
    return Instance(sites, tuple(generate_requests(n_requests, net, seed, delays)), delays)


# JSON documents ---------------------------------------------------------------

def request_to_dict(r: SliceRequest) -> dict:
    return {
        "id": r.id,
        "master": r.master,
        "secondary": r.secondary,
        "service": {"name": r.service.name, "bandwidth_mbps": r.service.bandwidth, "max_delay_ms": r.service.max_delay},
        "vnfs": [{"vcpu": v.vcpu, "processing_delay_ms": v.processing_delay} for v in r.vnfs],
    }


def request_from_dict(d: dict) -> SliceRequest:
    s = d["service"]
    return SliceRequest(
        d["id"],
        tuple(Vnf(v["vcpu"], v["processing_delay_ms"]) for v in d["vnfs"]),
        d["master"],
        d["secondary"],
        ServiceType(s["name"], s["bandwidth_mbps"], s["max_delay_ms"]),
    )


def instance_to_dict(inst: Instance) -> dict:
    return {
        "sites": [{"id": s.id, "host": s.host, "servers": list(s.servers), "bandwidth_mbps": s.bandwidth}
                  for s in inst.sites],
        "requests": [request_to_dict(r) for r in inst.requests],
        "delays": inst.delays.to_dict(),
    }


def instance_from_dict(d: dict) -> Instance:
    return Instance(
        tuple(MecSite(s["id"], s["host"], tuple(s["servers"]), s["bandwidth_mbps"]) for s in d["sites"]),
        tuple(request_from_dict(r) for r in d["requests"]),
        DelayMatrix.from_dict(d["delays"]),
    )


def weights_to_dict(w: CostWeights) -> dict:
    return {k: getattr(w, k) for k in ("c_mc", "c_sc", "c_tc", "alpha1", "alpha2", "alpha3")}


def weights_from_dict(d: dict) -> CostWeights:
    return CostWeights(**d)


def dump_json(obj: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=False)
        f.write("\n")
