"""Modified genetic algorithm (MGA) over feasible multi-connectivity placements.

Every individual is a :class:`~mecslice.state.Layout`. Operators only apply
moves that keep all constraints satisfied, so populations stay feasible
without a repair step.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field

from .heuristics import greedy_layout, latency_order
from .model import MC, CostWeights, Instance, Placement
from .state import Layout, delay_feasible_pairs


@dataclass(frozen=True)
class GaConfig:
    population: int = 100
    generations: int = 40
    crossover_rate: float = 0.9
    mutation_rate: float = 0.7
    seed: int = 0
    init_retries: int = 50

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise ValueError("population must be even and >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("crossover and mutation thresholds must lie in [0, 1]")


class PopulationError(RuntimeError):
    pass


@dataclass
class MgaResult:
    placement: Placement
    cost: float
    history: list[tuple[int, float, float, float]] = field(default_factory=list)

    @property
    def best_costs(self) -> list[float]:
        return [h[1] for h in self.history]


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def fitness(lay: Layout, w: CostWeights) -> tuple:
    # ties: fewer MECs, then fewer servers, then gene layout
    return (lay.cost(w), lay.n_mecs(), lay.n_servers(), lay.key())


def random_layout(inst: Instance, admitted, rng: random.Random, rejected=()) -> Layout | None:
    lay = Layout(inst, MC)
    lay.rejected = list(rejected)
    for r in latency_order(admitted):
        pairs = delay_feasible_pairs(inst, r, MC)
        rng.shuffle(pairs)
        if not any(lay.place(r, p, b) for p, b in pairs):
            return None
    return lay


def mga_init(inst: Instance, population: int, seed=0, weights: CostWeights = CostWeights(),
             retries: int = 50) -> list[Layout]:
    """Greedy-seeded initial population: the greedy layout plus ``population - 1`` random feasible ones."""
    if population < 2:
        raise ValueError("population must be >= 2")
    rng = _rng(seed)
    seed_layout = greedy_layout(inst, weights)
    admitted = [seed_layout.request(rid) for rid in sorted(seed_layout.genes)]
    pop = [seed_layout]
    while len(pop) < population:
        for _ in range(retries):
            lay = random_layout(inst, admitted, rng, seed_layout.rejected)
            if lay is not None:
                pop.append(lay)
                break
        else:
            raise PopulationError(f"no feasible random chromosome after {retries} attempts")
    return pop


def swap_roles(lay: Layout, rid: int) -> bool:
    """Exchange the primary and backup facilities of one request, if still feasible."""
    r = lay.request(rid)
    old_p = lay.remove(r, "primary")
    old_b = lay.remove(r, "backup")
    if lay.try_add(r, "primary", old_b[0]):
        if lay.try_add(r, "backup", old_p[0]):
            return True
        lay.remove(r, "primary")
    lay.add(r, "primary", *old_p)
    lay.add(r, "backup", *old_b)
    return False


def _paired_move(c1: Layout, role1: str, dest1: int, c2: Layout, role2: str, dest2: int, rid: int) -> bool:
    r = c1.request(rid)
    before = c1.genes[rid][role1]
    if not c1.move(r, role1, dest1):
        return False
    if c2.move(r, role2, dest2):
        return True
    c1.restore(r, role1, before)
    return False


def crossover(parent1: Layout, parent2: Layout, inst: Instance | None = None) -> tuple[Layout, Layout]:
    """Exchange MEC locations between two parents gene by gene."""
    c1, c2 = parent1.copy(), parent2.copy()
    for rid in sorted(c1.genes):
        if rid not in c2.genes:
            continue
        ma, mb = c1.mec_of(rid, "primary"), c1.mec_of(rid, "backup")
        mc, md = c2.mec_of(rid, "primary"), c2.mec_of(rid, "backup")
        if ma == md and mb != mc:
            _paired_move(c1, "backup", mc, c2, "primary", mb, rid)
        elif ma != md and mb == mc:
            _paired_move(c1, "primary", md, c2, "backup", ma, rid)
        elif (ma == md and mb == mc) or (ma == mc and mb == md):
            swap_roles(c1, rid)
            swap_roles(c2, rid)
        # ma == mc with mb != md (and its mirror) has no rule; genes stay as they are
    return c1, c2


def mutate(child: Layout, inst: Instance | None = None, seed=0) -> Layout:
    """Move the primary (else the backup) of one random request to a fresh MEC."""
    rng = _rng(seed)
    out = child.copy()
    if not out.genes:
        return out
    rid = rng.choice(sorted(out.genes))
    r = out.request(rid)
    ma, mb = out.mec_of(rid, "primary"), out.mec_of(rid, "backup")
    options = [m for m in range(len(out.inst.sites))
               if m not in (ma, mb) and (out.reachable(r, "primary", m) or out.reachable(r, "backup", m))]
    if not options:
        return out
    mc = rng.choice(options)
    if not out.move(r, "primary", mc):
        out.move(r, "backup", mc)
    return out


def rank_weights(n: int) -> list[int]:
    # best individual (index 0) gets weight n
    return list(range(n, 0, -1))


def _stats(gen: int, pop: list[Layout], w: CostWeights):
    costs = [lay.cost(w) for lay in pop]
    return (gen, min(costs), sum(costs) / len(costs), max(costs))


def solve_mga(inst: Instance, weights: CostWeights = CostWeights(), cfg: GaConfig = GaConfig()) -> MgaResult:
    rng = random.Random(cfg.seed)
    pop = mga_init(inst, cfg.population, rng, weights, cfg.init_retries)
    pop.sort(key=lambda lay: fitness(lay, weights))
    history = [_stats(0, pop, weights)]
    ranks = rank_weights(cfg.population)
    for gen in range(1, cfg.generations + 1):
        children = []
        for _ in range(cfg.population // 2):
            p1, p2 = rng.choices(pop, weights=ranks, k=2)
            if rng.random() <= cfg.crossover_rate:
                c1, c2 = crossover(p1, p2, inst)
            else:
                c1, c2 = p1, p2
            for child in (c1, c2):
                if rng.random() <= cfg.mutation_rate:
                    child = mutate(child, inst, rng)
                children.append(child)
        pool = pop + children
        pool.sort(key=lambda lay: fitness(lay, weights))
        pop = pool[:cfg.population]
        history.append(_stats(gen, pop, weights))
    best = pop[0]
    return MgaResult(best.to_placement("mga"), best.cost(weights), history)


def history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "best", "mean", "worst"])
    for gen, best, mean, worst in history:
        w.writerow([gen, repr(best), repr(mean), repr(worst)])
    return buf.getvalue()
