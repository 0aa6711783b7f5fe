"""Mutable placement state shared by the constructive heuristics and the GA."""

from __future__ import annotations

from .model import (MC, CostWeights, Instance, Placement, RequestPlacement, SlicePlacement,
                    SliceRequest, within_budget)
from .packing import ffd

ROLES = ("primary", "backup")


class Layout:
    """Per-server loads and per-request slice locations for one instance.

    A GA chromosome is a Layout: one gene per admitted request holding the
    primary and backup MEC with their per-VNF server slots.
    """

    def __init__(self, inst: Instance, connectivity: str = MC, anti_affinity: str = "mec"):
        self.inst = inst
        self.connectivity = connectivity
        self.anti_affinity = anti_affinity
        self.loads = [[0] * len(s.servers) for s in inst.sites]
        self.bw = [0.0] * len(inst.sites)
        self.genes: dict[int, dict[str, tuple[int, tuple[int, ...]]]] = {}
        self.rejected: list[int] = []
        self._reqs = {r.id: r for r in inst.requests}
        self._cost = None

    def copy(self) -> "Layout":
        new = Layout.__new__(Layout)
        new.inst = self.inst
        new.connectivity = self.connectivity
        new.anti_affinity = self.anti_affinity
        new.loads = [list(l) for l in self.loads]
        new.bw = list(self.bw)
        new.genes = {rid: dict(g) for rid, g in self.genes.items()}
        new.rejected = list(self.rejected)
        new._reqs = self._reqs
        new._cost = self._cost
        return new

    def request(self, rid: int) -> SliceRequest:
        return self._reqs[rid]

    def reachable(self, r: SliceRequest, role: str, mec: int) -> bool:
        return within_budget(r, r.anchor(role, self.connectivity), self.inst.sites[mec], self.inst.delays)

    def fits(self, r: SliceRequest, role: str, mec: int, exclude=()) -> tuple[int, ...] | None:
        """Server slots for the slice at ``mec`` under FFD, or None if any constraint fails."""
        site = self.inst.sites[mec]
        if not self.reachable(r, role, mec):
            return None
        if self.bw[mec] + r.bandwidth > site.bandwidth + 1e-9:
            return None
        return ffd(r.demands, self.loads[mec], site.servers, exclude)

    def add(self, r: SliceRequest, role: str, mec: int, servers: tuple[int, ...]) -> None:
        for v, s in zip(r.vnfs, servers):
            self.loads[mec][s] += v.vcpu
        self.bw[mec] += r.bandwidth
        self.genes.setdefault(r.id, {})[role] = (mec, servers)
        self._cost = None

    def remove(self, r: SliceRequest, role: str) -> tuple[int, tuple[int, ...]]:
        mec, servers = self.genes[r.id].pop(role)
        for v, s in zip(r.vnfs, servers):
            self.loads[mec][s] -= v.vcpu
        self.bw[mec] -= r.bandwidth
        if not self.genes[r.id]:
            del self.genes[r.id]
        self._cost = None
        return mec, servers

    def _exclusion(self, r: SliceRequest, role: str, mec: int):
        other = "backup" if role == "primary" else "primary"
        g = self.genes.get(r.id, {})
        if other not in g or g[other][0] != mec:
            return ()
        if self.anti_affinity == "mec":
            return None
        return set(g[other][1])

    def try_add(self, r: SliceRequest, role: str, mec: int) -> bool:
        excl = self._exclusion(r, role, mec)
        if excl is None:
            return False
        servers = self.fits(r, role, mec, excl)
        if servers is None:
            return False
        self.add(r, role, mec, servers)
        return True

    def place(self, r: SliceRequest, primary: int, backup: int) -> bool:
        """Place both slices of ``r`` or nothing."""
        if not self.try_add(r, "primary", primary):
            return False
        if not self.try_add(r, "backup", backup):
            self.remove(r, "primary")
            return False
        return True

    def unplace(self, r: SliceRequest) -> None:
        for role in ROLES:
            if role in self.genes.get(r.id, {}):
                self.remove(r, role)

    def move(self, r: SliceRequest, role: str, dest: int) -> bool:
        """Relocate one slice to ``dest`` (FFD re-pack); leaves state unchanged on failure."""
        old = self.remove(r, role)
        if dest != old[0] and self.try_add(r, role, dest):
            return True
        self.add(r, role, *old)
        return False

    def restore(self, r: SliceRequest, role: str, old: tuple[int, tuple[int, ...]]) -> None:
        self.remove(r, role)
        self.add(r, role, *old)

    def mec_of(self, rid: int, role: str) -> int:
        return self.genes[rid][role][0]

    # objective --------------------------------------------------------------

    def n_mecs(self) -> int:
        return sum(1 for l in self.loads if any(l))

    def n_servers(self) -> int:
        return sum(1 for l in self.loads for x in l if x)

    def traffic(self) -> float:
        total = 0.0
        inst = self.inst
        for rid in sorted(self.genes):
            r = self._reqs[rid]
            g = self.genes[rid]
            total += (inst.delay(r.master, g["primary"][0])
                      + inst.delay(r.anchor("backup", self.connectivity), g["backup"][0])) * r.bandwidth
        return total

    def cost(self, w: CostWeights) -> float:
        if self._cost is None or self._cost[0] is not w:
            value = (w.alpha1 * w.c_mc * self.n_mecs() + w.alpha2 * w.c_sc * self.n_servers()
                     + w.alpha3 * w.c_tc * self.traffic())
            self._cost = (w, value)
        return self._cost[1]

    def key(self) -> tuple:
        return tuple((rid, g["primary"], g["backup"]) for rid, g in sorted(self.genes.items()))

    def to_placement(self, method: str = "") -> Placement:
        return Placement(
            tuple(RequestPlacement(rid, SlicePlacement(*g["primary"]), SlicePlacement(*g["backup"]))
                  for rid, g in self.genes.items()),
            tuple(self.rejected),
            self.connectivity,
            self.anti_affinity,
            method,
        )

    @classmethod
    def from_placement(cls, p: Placement, inst: Instance) -> "Layout":
        lay = cls(inst, p.connectivity, p.anti_affinity)
        for a in p.assignments:
            r = lay.request(a.request)
            lay.add(r, "primary", a.primary.mec, a.primary.servers)
            lay.add(r, "backup", a.backup.mec, a.backup.servers)
        lay.rejected = list(p.rejected)
        return lay


def delay_feasible_pairs(inst: Instance, r: SliceRequest, connectivity: str = MC,
                         same_mec: bool = False) -> list[tuple[int, int]]:
    """Ordered (primary, backup) MEC pairs meeting both slices' latency and bandwidth limits."""
    prim = [m for m, s in enumerate(inst.sites)
            if within_budget(r, r.master, s, inst.delays) and r.bandwidth <= s.bandwidth]
    back = [m for m, s in enumerate(inst.sites)
            if within_budget(r, r.anchor("backup", connectivity), s, inst.delays) and r.bandwidth <= s.bandwidth]
    return [(p, b) for p in prim for b in back if same_mec or p != b]
