"""Substrate topology: SNDlib native parsing, propagation delays, MEC site selection."""

from __future__ import annotations

import heapq
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

EARTH_RADIUS_KM = 6371.0
# fiber propagation, microseconds per km
DEFAULT_US_PER_KM = 5.0


class TopologyError(ValueError):
    pass


class SndlibParseError(TopologyError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Node:
    name: str
    longitude: float
    latitude: float


@dataclass(frozen=True)
class Link:
    id: str
    source: str
    target: str
    delay: float  # ms


@dataclass(frozen=True)
class Network:
    """Undirected substrate graph. Node order defines the node id used for tie-breaks."""

    name: str
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False)
    _adj: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {n.name: i for i, n in enumerate(self.nodes)}
        if len(index) != len(self.nodes):
            raise TopologyError("duplicate node names")
        adj: dict[str, dict[str, float]] = {n.name: {} for n in self.nodes}
        for link in self.links:
            if link.source not in index or link.target not in index:
                raise TopologyError(f"link {link.id} references unknown node")
            if link.source == link.target:
                raise TopologyError(f"link {link.id} is a self-loop")
            if link.target in adj[link.source]:
                raise TopologyError(f"duplicate link {link.source}-{link.target}")
            if not link.delay > 0:
                raise TopologyError(f"link {link.id} has non-positive delay")
            adj[link.source][link.target] = link.delay
            adj[link.target][link.source] = link.delay
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", adj)

    @property
    def node_names(self) -> list[str]:
        return [n.name for n in self.nodes]

    def index(self, name: str) -> int:
        return self._index[name]

    def node(self, name: str) -> Node:
        return self.nodes[self._index[name]]

    def neighbors(self, name: str) -> dict[str, float]:
        return dict(self._adj[name])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": [{"name": n.name, "longitude": n.longitude, "latitude": n.latitude} for n in self.nodes],
            "links": [{"id": l.id, "source": l.source, "target": l.target, "delay_ms": l.delay} for l in self.links],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        return cls(
            name=d.get("name", ""),
            nodes=tuple(Node(n["name"], float(n["longitude"]), float(n["latitude"])) for n in d["nodes"]),
            links=tuple(Link(l["id"], l["source"], l["target"], float(l["delay_ms"])) for l in d["links"]),
        )


def great_circle_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Haversine distance between two (longitude, latitude) points in degrees."""
    lon1, lat1 = map(math.radians, a)
    lon2, lat2 = map(math.radians, b)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def delay_for_distance(km: float, us_per_km: float = DEFAULT_US_PER_KM) -> float:
    return km * us_per_km / 1000.0


def link_delay(a: tuple[float, float], b: tuple[float, float], us_per_km: float = DEFAULT_US_PER_KM) -> float:
    """Propagation delay in ms between two (longitude, latitude) coordinates."""
    return delay_for_distance(great_circle_km(a, b), us_per_km)


_NODE_RE = re.compile(r"^(\S+)\s*\(\s*(\S+)\s+(\S+)\s*\)\s*$")
_LINK_RE = re.compile(r"^(\S+)\s*\(\s*(\S+)\s+(\S+)\s*\)(.*)$")


def parse_sndlib(text: str, name: str = "", us_per_km: float = DEFAULT_US_PER_KM) -> Network:
    """Parse an SNDlib native-format network document.

    Only the NODES and LINKS sections are interpreted; DEMANDS and
    ADMISSIBLE_PATHS are skipped. Link delays are derived from the great-circle
    distance between the endpoint coordinates.
    """
    section = None
    nodes: list[Node] = []
    raw_links: list[tuple[int, str, str, str]] = []
    seen_sections = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("?"):
            continue
        if section is None:
            m = re.match(r"^([A-Z_]+)\s*\($", line)
            if not m:
                raise SndlibParseError(lineno, f"expected section header, got {line!r}")
            section = m.group(1)
            if section in seen_sections:
                raise SndlibParseError(lineno, f"section {section} repeated")
            seen_sections.add(section)
            continue
        if line == ")":
            section = None
            continue
        if section == "NODES":
            m = _NODE_RE.match(line)
            if not m:
                raise SndlibParseError(lineno, f"malformed node entry {line!r}")
            try:
                lon, lat = float(m.group(2)), float(m.group(3))
            except ValueError:
                raise SndlibParseError(lineno, f"bad coordinates in {line!r}") from None
            if not (-180 <= lon <= 180 and -90 <= lat <= 90):
                raise SndlibParseError(lineno, f"coordinates out of range in {line!r}")
            if any(n.name == m.group(1) for n in nodes):
                raise SndlibParseError(lineno, f"duplicate node {m.group(1)}")
            nodes.append(Node(m.group(1), lon, lat))
        elif section == "LINKS":
            m = _LINK_RE.match(line)
            if not m:
                raise SndlibParseError(lineno, f"malformed link entry {line!r}")
            raw_links.append((lineno, m.group(1), m.group(2), m.group(3)))
    if section is not None:
        raise SndlibParseError(len(text.splitlines()), f"section {section} not closed")
    for required in ("NODES", "LINKS"):
        if required not in seen_sections:
            raise SndlibParseError(0, f"missing {required} section")

    by_name = {n.name: n for n in nodes}
    links: list[Link] = []
    seen_pairs: set[frozenset] = set()
    for lineno, lid, src, dst in raw_links:
        for end in (src, dst):
            if end not in by_name:
                raise SndlibParseError(lineno, f"link {lid} references unknown node {end!r}")
        if src == dst:
            raise SndlibParseError(lineno, f"link {lid} is a self-loop")
        pair = frozenset((src, dst))
        if pair in seen_pairs:
            raise SndlibParseError(lineno, f"duplicate link {src}-{dst}")
        seen_pairs.add(pair)
        a, b = by_name[src], by_name[dst]
        delay = link_delay((a.longitude, a.latitude), (b.longitude, b.latitude), us_per_km)
        if delay <= 0:
            raise SndlibParseError(lineno, f"link {lid} joins co-located nodes")
        links.append(Link(lid, src, dst, delay))
    return Network(name=name, nodes=tuple(nodes), links=tuple(links))


def serialize_sndlib(net: Network) -> str:
    lines = ["?SNDlib native format; type: network; version: 1.0"]
    if net.name:
        lines.append(f"# network {net.name}")
    lines += ["", "NODES ("]
    lines += [f"  {n.name} ( {n.longitude!r} {n.latitude!r} )" for n in net.nodes]
    lines += [")", "", "LINKS ("]
    lines += [f"  {l.id} ( {l.source} {l.target} ) 0.00 0.00 0.00 0.00 ( )" for l in net.links]
    lines += [")", ""]
    return "\n".join(lines)


def load_sndlib(path, us_per_km: float = DEFAULT_US_PER_KM) -> Network:
    from pathlib import Path

    p = Path(path)
    return parse_sndlib(p.read_text(), name=p.stem, us_per_km=us_per_km)


def germany50(us_per_km: float = DEFAULT_US_PER_KM) -> Network:
    """The bundled Germany50 topology (50 nodes, 88 links)."""
    text = resources.files("mecslice").joinpath("data/germany50.txt").read_text()
    return parse_sndlib(text, name="germany50", us_per_km=us_per_km)


class DelayMatrix:
    """Symmetric node-to-node delay lookup in ms, indexed by node name."""

    def __init__(self, names, values):
        self.names = tuple(names)
        self.values = np.asarray(values, dtype=float)
        self._index = {n: i for i, n in enumerate(self.names)}
        if self.values.shape != (len(self.names), len(self.names)):
            raise ValueError("delay matrix shape does not match node list")

    def __getitem__(self, key: tuple[str, str]) -> float:
        a, b = key
        return float(self.values[self._index[a], self._index[b]])

    def __contains__(self, name) -> bool:
        return name in self._index

    def to_dict(self) -> dict:
        return {"nodes": list(self.names), "delay_ms": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DelayMatrix":
        return cls(d["nodes"], d["delay_ms"])

    @classmethod
    def from_pairs(cls, pairs: dict[tuple[str, str], float]) -> "DelayMatrix":
        """Build from explicit pair delays; unspecified pairs are set to infinity."""
        names = sorted({n for p in pairs for n in p})
        idx = {n: i for i, n in enumerate(names)}
        vals = np.full((len(names), len(names)), math.inf)
        np.fill_diagonal(vals, 0.0)
        for (a, b), d in pairs.items():
            vals[idx[a], idx[b]] = vals[idx[b], idx[a]] = d
        return cls(names, vals)

    def __repr__(self):
        return f"DelayMatrix({len(self.names)} nodes)"


def all_pairs_delay(net: Network) -> DelayMatrix:
    """Shortest-path propagation delay between every node pair (Dijkstra from each node)."""
    names = net.node_names
    n = len(names)
    vals = np.full((n, n), math.inf)
    for s, src in enumerate(names):
        dist = {src: 0.0}
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in net._adj[u].items():
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        for v, d in dist.items():
            vals[s, net.index(v)] = d
    unreachable = [(names[i], names[j]) for i, j in zip(*np.nonzero(np.isinf(vals))) if i < j]
    if unreachable:
        shown = ", ".join(f"{a}-{b}" for a, b in unreachable[:10])
        raise TopologyError(f"network is disconnected; unreachable pairs: {shown}"
                            + (f" (+{len(unreachable) - 10} more)" if len(unreachable) > 10 else ""))
    # symmetrize away float noise from different summation orders
    vals = np.minimum(vals, vals.T)
    return DelayMatrix(names, vals)


def closeness(delays: DelayMatrix) -> np.ndarray:
    totals = delays.values.sum(axis=1)
    with np.errstate(divide="ignore"):
        return np.where(totals > 0, 1.0 / totals, math.inf)


def select_mec_sites(net: Network, k: int, seed: int = 0, max_iter: int = 100,
                     n_init: int = 1, delays: DelayMatrix | None = None) -> list[str]:
    """Cluster base stations by coordinates and pick the most central node per cluster.

    Centrality is closeness over shortest-path delays to the whole network; ties
    go to the lowest node index. Clusters that come out empty are backfilled
    with the most central unselected nodes so exactly ``k`` sites are returned.
    """
    from sklearn.cluster import KMeans

    n = len(net.nodes)
    if not 1 <= k <= n:
        raise TopologyError(f"k must be in [1, {n}], got {k}")
    delays = delays or all_pairs_delay(net)
    score = closeness(delays)
    coords = np.array([[nd.longitude, nd.latitude] for nd in net.nodes])
    if k == n:
        labels = np.arange(n)
    else:
        km = KMeans(n_clusters=k, n_init=n_init, max_iter=max_iter, random_state=seed)
        labels = km.fit_predict(coords)

    def best(members):
        # max closeness, lowest index on ties
        return min(members, key=lambda i: (-score[i], i))

    chosen: list[int] = []
    for c in range(k):
        members = [i for i in range(n) if labels[i] == c]
        if members:
            chosen.append(best(members))
    rest = [i for i in range(n) if i not in chosen]
    while len(chosen) < k:
        pick = best(rest)
        rest.remove(pick)
        chosen.append(pick)
    return [net.nodes[i].name for i in sorted(chosen)]


def network_json(net: Network, delays: DelayMatrix | None = None) -> str:
    doc = net.to_dict()
    if delays is not None:
        doc["delays"] = delays.to_dict()
    return json.dumps(doc, indent=2)
