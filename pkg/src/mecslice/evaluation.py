"""Resource counts, failure availability and throughput of a placement."""

from __future__ import annotations

import csv
import io
import itertools
import math
import random
from dataclasses import asdict, dataclass, field

from .model import MC, CostBreakdown, CostWeights, Instance, Placement, total_cost
from .packing import ffd

NONE, ONSITE, INTER_MEC = "none", "onsite", "inter-mec"
BACKUP_MODES = (NONE, ONSITE, INTER_MEC)
EXHAUSTIVE_LIMIT = 50_000


@dataclass(frozen=True)
class FailureScenario:
    mec: int
    failed: int = 1
    backup: str = INTER_MEC
    whole_facility: bool = False
    onsite_method: int = 2  # 1: backup shares the primary's servers, 2: server-disjoint

    def __post_init__(self):
        if self.backup not in BACKUP_MODES:
            raise ValueError(f"unknown backup mode {self.backup!r}")
        if self.failed < 0:
            raise ValueError("failed server count must be >= 0")
        if self.onsite_method not in (1, 2):
            raise ValueError("onsite_method must be 1 or 2")


@dataclass
class AvailabilityResult:
    value: float
    method: str  # "exhaustive" or "montecarlo"
    samples: int
    flagged: tuple[int, ...] = ()
    stderr: float = 0.0


def resource_usage(p: Placement) -> tuple[int, int]:
    """(MECs hosting at least one slice, activated servers)."""
    return len(p.used_mecs()), len(p.used_servers())


def _slice_sets(p: Placement, inst: Instance, sc: FailureScenario):
    """Per admitted request, the server sets of the slices that can carry it."""
    out: dict[int, list[frozenset]] = {}
    flagged = []
    if sc.backup == ONSITE and sc.onsite_method == 2:
        loads = [[0] * len(s.servers) for s in inst.sites]
        for a in p.assignments:
            r = inst.request(a.request)
            for v, s in zip(r.vnfs, a.primary.servers):
                loads[a.primary.mec][s] += v.vcpu
    for a in p.assignments:
        prim = frozenset((a.primary.mec, s) for s in a.primary.servers)
        if sc.backup == NONE:
            out[a.request] = [prim]
        elif sc.backup == INTER_MEC:
            out[a.request] = [prim, frozenset((a.backup.mec, s) for s in a.backup.servers)]
        elif sc.onsite_method == 1:
            out[a.request] = [prim, prim]
        else:
            r = inst.request(a.request)
            m = a.primary.mec
            slots = ffd(r.demands, loads[m], inst.sites[m].servers, exclude=set(a.primary.servers))
            if slots is None:
                flagged.append(a.request)
                out[a.request] = [prim]
            else:
                for v, s in zip(r.vnfs, slots):
                    loads[m][s] += v.vcpu
                out[a.request] = [prim, frozenset((m, s) for s in slots)]
    return out, tuple(flagged)


def availability(p: Placement, inst: Instance, scenario: FailureScenario, trials: int = 10_000,
                 seed: int = 0, exhaustive: bool | None = None) -> AvailabilityResult:
    """Fraction of admitted requests keeping at least one intact slice when servers of one MEC fail.

    Failed servers are drawn uniformly among all servers of ``scenario.mec``.
    With ``exhaustive=None`` every failure subset is enumerated whenever there
    are at most 50,000 of them; otherwise ``trials`` Monte Carlo draws are used.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_servers = len(inst.sites[scenario.mec].servers)
    k = n_servers if scenario.whole_facility else scenario.failed
    if k > n_servers:
        raise ValueError(f"cannot fail {k} of {n_servers} servers")
    sets, flagged = _slice_sets(p, inst, scenario)
    if not sets:
        return AvailabilityResult(1.0, "exhaustive", 1, flagged)
    # bitmask of target-MEC servers per slice; slices elsewhere never fail
    masks = []
    for slices in sets.values():
        masks.append([sum(1 << s for m, s in sl if m == scenario.mec) for sl in slices])
    n_req = len(masks)

    def served(failed_mask: int) -> int:
        return sum(1 for slices in masks if any(not (sm & failed_mask) for sm in slices))

    if exhaustive is None:
        exhaustive = math.comb(n_servers, k) <= EXHAUSTIVE_LIMIT
    if exhaustive:
        total = 0
        count = 0
        for combo in itertools.combinations(range(n_servers), k):
            total += served(sum(1 << s for s in combo))
            count += 1
        return AvailabilityResult(total / (count * n_req), "exhaustive", count, flagged)
    rng = random.Random(seed)
    values = []
    for _ in range(trials):
        values.append(served(sum(1 << s for s in rng.sample(range(n_servers), k))) / n_req)
    mean = sum(values) / trials
    var = sum((v - mean) ** 2 for v in values) / max(1, trials - 1)
    return AvailabilityResult(mean, "montecarlo", trials, flagged, math.sqrt(var / trials))


def availability_curve(p: Placement, inst: Instance, mec: int, modes=BACKUP_MODES, trials: int = 10_000,
                       seed: int = 0) -> list[tuple[str, int, float]]:
    """Availability for every failed-server count 1..S of one facility, per backup mode."""
    rows = []
    for mode in modes:
        for k in range(1, len(inst.sites[mec].servers) + 1):
            res = availability(p, inst, FailureScenario(mec, k, mode), trials, seed)
            rows.append((mode, k, res.value))
    return rows


def busiest_mec(p: Placement) -> int | None:
    counts: dict[int, int] = {}
    for m, _ in p.used_servers():
        counts[m] = counts.get(m, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda m: (-counts[m], m))


def throughput(p: Placement, inst: Instance, mode: str = "aggregate") -> tuple[float, dict[int, float]]:
    """Delivered Mbps in total and per request.

    In ``aggregate`` mode a multi-connectivity request multiplexes both slices
    and gets twice its bandwidth; ``duplicate`` mode and single-connectivity
    placements deliver the nominal bandwidth.
    """
    if mode not in ("aggregate", "duplicate"):
        raise ValueError(f"unknown throughput mode {mode!r}")
    factor = 2.0 if mode == "aggregate" and p.connectivity == MC else 1.0
    per = {a.request: factor * inst.request(a.request).bandwidth for a in p.assignments}
    return sum(per.values()), per


@dataclass
class EvaluationReport:
    method: str
    cost: CostBreakdown
    mecs: int
    servers: int
    admitted: int
    rejected: int
    throughput_aggregate: float
    throughput_duplicate: float
    availability: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cost"] = {"mc": self.cost.mc, "sc": self.cost.sc, "tc": self.cost.tc, "total": self.cost.total}
        return d

    def csv_rows(self) -> list[tuple[str, str, float]]:
        rows = [(self.method, "total_cost", self.cost.total), (self.method, "mc_cost", self.cost.mc),
                (self.method, "sc_cost", self.cost.sc), (self.method, "tc_cost", self.cost.tc),
                (self.method, "mecs", self.mecs), (self.method, "servers", self.servers),
                (self.method, "admitted", self.admitted), (self.method, "rejected", self.rejected),
                (self.method, "throughput_aggregate", self.throughput_aggregate),
                (self.method, "throughput_duplicate", self.throughput_duplicate)]
        rows += [(self.method, f"availability[{k}]", v) for k, v in sorted(self.availability.items())]
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "metric", "value"])
        w.writerows(self.csv_rows())
        return buf.getvalue()


def evaluate(p: Placement, inst: Instance, weights: CostWeights = CostWeights(),
             scenarios: list[FailureScenario] = (), trials: int = 10_000, seed: int = 0) -> EvaluationReport:
    cost = total_cost(p, inst, weights)
    mecs, servers = resource_usage(p)
    avail = {}
    for sc in scenarios:
        label = f"{sc.backup}:mec{sc.mec}:k{'all' if sc.whole_facility else sc.failed}"
        avail[label] = availability(p, inst, sc, trials, seed).value
    return EvaluationReport(
        method=p.method or "?",
        cost=cost,
        mecs=mecs,
        servers=servers,
        admitted=len(p.assignments),
        rejected=len(p.rejected),
        throughput_aggregate=throughput(p, inst, "aggregate")[0],
        throughput_duplicate=throughput(p, inst, "duplicate")[0],
        availability=avail,
    )
