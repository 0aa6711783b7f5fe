"""Server-level packing of VNF vCPU demands inside one MEC facility."""

from __future__ import annotations

import math
from functools import lru_cache


def ffd(demands, loads, capacities, exclude=()) -> tuple[int, ...] | None:
    """First-fit decreasing onto already-active servers, then idle ones.

    ``loads`` is the current per-server load and is not modified. Returns the
    chosen server per demand (in the input order) or ``None`` when the demands
    do not fit.
    """
    loads = list(loads)
    active = [s for s in range(len(capacities)) if loads[s] > 0 and s not in exclude]
    idle = [s for s in range(len(capacities)) if loads[s] == 0 and s not in exclude]
    order = active + idle
    out = [0] * len(demands)
    for i in sorted(range(len(demands)), key=lambda i: -demands[i]):
        d = demands[i]
        for s in order:
            if loads[s] + d <= capacities[s]:
                if loads[s] == 0 and s in idle:
                    # once opened it behaves like an active server for later items
                    idle.remove(s)
                    active.append(s)
                    order = active + idle
                loads[s] += d
                out[i] = s
                break
        else:
            return None
    return tuple(out)


def lower_bound(demands, capacity: int) -> int:
    return math.ceil(sum(demands) / capacity) if demands else 0


@lru_cache(maxsize=200_000)
def _min_bins_uniform(items: tuple[int, ...], capacity: int, limit: int) -> tuple[int, tuple[int, ...]] | None:
    """Exact minimum bin count for items sorted descending; None if more than ``limit`` bins needed."""
    if not items:
        return 0, ()
    if items[0] > capacity:
        return None
    lb = lower_bound(items, capacity)
    if lb > limit:
        return None
    ub = _ffd_uniform(items, capacity)
    if max(ub) + 1 == lb:
        return lb, ub
    for k in range(lb, min(max(ub), limit) + 1):
        found = _pack_into(items, capacity, k)
        if found is not None:
            return k, found
    if max(ub) + 1 <= limit:
        return max(ub) + 1, ub
    return None


def _ffd_uniform(items, capacity) -> tuple[int, ...]:
    loads: list[int] = []
    out = []
    for d in items:
        for b, load in enumerate(loads):
            if load + d <= capacity:
                loads[b] += d
                out.append(b)
                break
        else:
            loads.append(d)
            out.append(len(loads) - 1)
    return tuple(out)


def _pack_into(items, capacity, k) -> tuple[int, ...] | None:
    """Depth-first search for a packing of ``items`` into ``k`` bins."""
    loads = [0] * k
    out = [0] * len(items)
    suffix = [0] * (len(items) + 1)
    for i in range(len(items) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + items[i]

    def dfs(i):
        if i == len(items):
            return True
        free = sum(capacity - l for l in loads)
        if free < suffix[i]:
            return False
        tried = set()
        for b in range(k):
            if loads[b] in tried:
                continue
            tried.add(loads[b])
            if loads[b] + items[i] <= capacity:
                loads[b] += items[i]
                out[i] = b
                if dfs(i + 1):
                    return True
                loads[b] -= items[i]
        return False

    return tuple(out) if dfs(0) else None


def min_servers(demands, capacities) -> tuple[int, tuple[int, ...]] | None:
    """Minimum number of servers holding ``demands`` plus one optimal mapping.

    Uses the largest servers first; when all capacities are equal the result is
    exact. Returns ``None`` when the demands cannot be hosted at all.
    """
    if not demands:
        return 0, ()
    order = sorted(range(len(demands)), key=lambda i: (-demands[i], i))
    items = tuple(demands[i] for i in order)
    server_order = sorted(range(len(capacities)), key=lambda s: (-capacities[s], s))
    if len(set(capacities)) == 1:
        res = _min_bins_uniform(items, capacities[0], len(capacities))
    else:
        # fall back to an exact search over the k largest servers
        res = None
        for k in range(1, len(capacities) + 1):
            caps = [capacities[s] for s in server_order[:k]]
            if sum(caps) < sum(items):
                continue
            found = _pack_hetero(items, caps)
            if found is not None:
                res = (k, found)
                break
    if res is None:
        return None
    count, bins = res
    mapping = [0] * len(demands)
    for pos, i in enumerate(order):
        mapping[i] = server_order[bins[pos]]
    return count, tuple(mapping)


def _pack_hetero(items, caps) -> tuple[int, ...] | None:
    loads = [0] * len(caps)
    out = [0] * len(items)

    def dfs(i):
        if i == len(items):
            return True
        tried = set()
        for b in range(len(caps)):
            key = (loads[b], caps[b])
            if key in tried:
                continue
            tried.add(key)
            if loads[b] + items[i] <= caps[b]:
                loads[b] += items[i]
                out[i] = b
                if dfs(i + 1):
                    return True
                loads[b] -= items[i]
        return False

    return tuple(out) if dfs(0) else None
