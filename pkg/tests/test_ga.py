import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import dm, placement, req
from mecslice.ga import (GaConfig, PopulationError, crossover, fitness, history_csv, mga_init, mutate, rank_weights,
                         solve_mga)
from mecslice.heuristics import solve_greedy
from mecslice.model import CostWeights, Instance, MecSite, build_instance, check_feasibility
from mecslice.state import Layout
from mecslice.topology import all_pairs_delay, germany50


def four_mec_instance(primary_reach=(0, 1, 2, 3), backup_reach=(0, 1, 2, 3)):
    pairs = {("H0", "H1"): 0.5, ("H0", "H2"): 0.5, ("H0", "H3"): 0.5, ("H1", "H2"): 0.5, ("H1", "H3"): 0.5,
             ("H2", "H3"): 0.5, ("B0", "B1"): 0.5}
    for m in range(4):
        pairs["B0", f"H{m}"] = 1.0 if m in primary_reach else 9.0
        pairs["B1", f"H{m}"] = 1.0 if m in backup_reach else 9.0
    sites = tuple(MecSite(i, f"H{i}") for i in range(4))
    return Instance(sites, (req(0, [2, 2], max_delay=2.0),), dm(pairs))


def layout_of(inst, pm, bm):
    p = placement({0: ((pm, (0, 0)), (bm, (0, 0)))})
    return Layout.from_placement(p, inst)


def test_crossover_figure_example():
    # MEC-2 is shared: parent 1 keeps its backup there, parent 2 its primary; MEC-1 and MEC-4 swap
    inst = four_mec_instance()
    p1, p2 = layout_of(inst, 0, 1), layout_of(inst, 1, 3)
    c1, c2 = crossover(p1, p2, inst)
    assert (c1.mec_of(0, "primary"), c1.mec_of(0, "backup")) == (3, 1)
    assert (c2.mec_of(0, "primary"), c2.mec_of(0, "backup")) == (1, 0)
    # parents are untouched
    assert (p1.mec_of(0, "primary"), p2.mec_of(0, "backup")) == (0, 3)


def test_crossover_first_rule():
    inst = four_mec_instance()
    c1, c2 = crossover(layout_of(inst, 0, 1), layout_of(inst, 2, 0), inst)
    assert (c1.mec_of(0, "primary"), c1.mec_of(0, "backup")) == (0, 2)
    assert (c2.mec_of(0, "primary"), c2.mec_of(0, "backup")) == (1, 0)


def test_crossover_identical_parents_swap_roles():
    inst = four_mec_instance()
    c1, c2 = crossover(layout_of(inst, 0, 1), layout_of(inst, 0, 1), inst)
    assert (c1.mec_of(0, "primary"), c1.mec_of(0, "backup")) == (1, 0)
    assert (c2.mec_of(0, "primary"), c2.mec_of(0, "backup")) == (1, 0)


def test_crossover_skips_infeasible_move():
    # MEC 2 is out of primary reach, so the swap that would put parent 2's primary there is skipped
    inst = four_mec_instance(primary_reach=(0, 1, 3))
    p1, p2 = layout_of(inst, 0, 2), layout_of(inst, 1, 0)
    c1, c2 = crossover(p1, p2, inst)
    assert c1.key() == p1.key() and c2.key() == p2.key()


def test_crossover_uncovered_case_unchanged():
    inst = four_mec_instance()
    p1, p2 = layout_of(inst, 0, 1), layout_of(inst, 0, 2)
    c1, c2 = crossover(p1, p2, inst)
    assert c1.key() == p1.key() and c2.key() == p2.key()


def test_mutation_figure_example():
    # primary stays in MEC-4; MEC-3 is only reachable for the backup, so the backup moves there
    inst = four_mec_instance(primary_reach=(0, 3), backup_reach=(0, 2, 3))
    child = layout_of(inst, 3, 0)
    out = mutate(child, inst, seed=1)
    assert (out.mec_of(0, "primary"), out.mec_of(0, "backup")) == (3, 2)
    assert check_feasibility(out.to_placement(), inst) == []


def test_mutation_no_third_mec():
    inst = four_mec_instance(primary_reach=(0, 1), backup_reach=(0, 1))
    child = layout_of(inst, 0, 1)
    for seed in range(10):
        assert mutate(child, inst, seed).key() == child.key()


def test_rank_weights():
    assert rank_weights(4) == [4, 3, 2, 1]


@pytest.fixture(scope="module")
def g50():
    net = germany50()
    return net, all_pairs_delay(net)


def test_init_population(g50):
    net, d = g50
    inst = build_instance(net, 7, 15, 2, delays=d)
    pop = mga_init(inst, 2, seed=3)
    assert len(pop) == 2
    assert pop[0].to_placement("greedy") == solve_greedy(inst)
    for lay in mga_init(inst, 10, seed=3):
        assert check_feasibility(lay.to_placement(), inst) == []
    keys = [lay.key() for lay in mga_init(inst, 10, seed=3)]
    assert keys == [lay.key() for lay in mga_init(inst, 10, seed=3)]


def test_init_failure_raises(monkeypatch):
    import mecslice.ga as ga

    inst = four_mec_instance()
    monkeypatch.setattr(ga, "random_layout", lambda *a, **k: None)
    with pytest.raises(PopulationError):
        mga_init(inst, 4, seed=0, retries=3)


def test_operators_keep_feasibility(g50):
    net, d = g50
    rng = random.Random(0)
    for seed in range(3):
        inst = build_instance(net, 7, 20, seed, delays=d)
        pop = mga_init(inst, 10, seed=seed)
        for _ in range(60):
            a, b = rng.sample(pop, 2)
            c1, c2 = crossover(a, b, inst)
            m = mutate(rng.choice([c1, c2]), inst, rng)
            for lay in (c1, c2, m):
                p = lay.to_placement()
                assert check_feasibility(p, inst) == []
                assert all(x.primary.mec != x.backup.mec for x in p.assignments)
            pop[rng.randrange(len(pop))] = m


def test_degenerate_ga_returns_best_initial(g50):
    net, d = g50
    inst = build_instance(net, 7, 12, 5, delays=d)
    w = CostWeights()
    cfg = GaConfig(population=10, generations=1, crossover_rate=0.0, mutation_rate=0.0, seed=4)
    pop = mga_init(inst, 10, random.Random(4), w)
    best = min(pop, key=lambda lay: fitness(lay, w))
    res = solve_mga(inst, w, cfg)
    assert res.cost == best.cost(w)
    assert res.cost <= pop[0].cost(w)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 1000))
def test_history_non_increasing_and_deterministic(seed):
    net = germany50()
    inst = build_instance(net, 7, 10, seed)
    cfg = GaConfig(population=12, generations=6, seed=seed)
    a = solve_mga(inst, CostWeights(), cfg)
    b = solve_mga(inst, CostWeights(), cfg)
    best = a.best_costs
    assert all(x >= y for x, y in zip(best, best[1:]))
    assert len(a.history) == 7
    assert a.placement == b.placement and a.history == b.history
    assert check_feasibility(a.placement, inst) == []


def test_mga_not_worse_than_greedy(g50):
    net, d = g50
    inst = build_instance(net, 7, 20, 1, delays=d)
    from mecslice.model import total_cost
    res = solve_mga(inst, CostWeights(), GaConfig(population=20, generations=10, seed=1))
    assert res.cost <= total_cost(solve_greedy(inst), inst).total


def test_history_csv():
    text = history_csv([(0, 3.0, 4.0, 5.0)])
    assert text == "generation,best,mean,worst\n0,3.0,4.0,5.0\n"


@pytest.mark.parametrize("kw", [dict(population=3), dict(population=0), dict(generations=0),
                                dict(crossover_rate=1.5), dict(mutation_rate=-0.1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GaConfig(**kw)
