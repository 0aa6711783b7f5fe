import statistics

import pytest
from hypothesis import given, settings, strategies as st

from helpers import dm, random_small_instance, req
from mecslice.exact import ExactConfig, InfeasibleInstance, solve_exact
from mecslice.heuristics import latency_order, solve_baseline, solve_greedy, solve_nsp_proxy
from mecslice.model import CostWeights, Instance, MecSite, build_instance, check_feasibility, total_cost
from mecslice.experiment import admissible
from mecslice.topology import all_pairs_delay, germany50


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_greedy_single_request_is_optimal(seed):
    inst = random_small_instance(seed, n_req=1, bandwidth=10_000.0)
    try:
        exact = solve_exact(inst, cfg=ExactConfig(reject_infeasible=True))
    except InfeasibleInstance:
        return
    g = solve_greedy(inst)
    assert total_cost(g, inst).total == exact.cost


def test_second_request_reuses_mecs():
    delays = dm({("B0", "H0"): 0.5, ("B0", "H1"): 1.0, ("B0", "H2"): 1.0, ("B1", "H0"): 1.0, ("B1", "H1"): 0.5,
                 ("B1", "H2"): 0.75, ("H0", "H1"): 0.5, ("H0", "H2"): 0.5, ("H1", "H2"): 0.5, ("B0", "B1"): 0.5})
    inst = Instance(tuple(MecSite(i, f"H{i}") for i in range(3)), (req(0, [2]), req(1, [3])), delays)
    first = solve_greedy(Instance(inst.sites, inst.requests[:1], delays))
    both = solve_greedy(inst)
    assert both.used_mecs() == first.used_mecs() == {0, 1}
    assert len(both.used_servers()) == len(first.used_servers())


def test_latency_order():
    a, b, c = req(0, [1], max_delay=5.0), req(1, [1], max_delay=2.0), req(2, [1], max_delay=2.0, bw=50)
    assert [r.id for r in latency_order([a, b, c])] == [2, 1, 0]


def test_baseline_single_pair():
    delays = dm({("B0", "H0"): 0.5, ("B0", "H1"): 0.5, ("B1", "H0"): 0.5, ("B1", "H1"): 0.5,
                 ("B0", "H2"): 9.0, ("B1", "H2"): 9.0, ("H0", "H1"): 1.0, ("H0", "H2"): 1.0, ("H1", "H2"): 1.0})
    inst = Instance(tuple(MecSite(i, f"H{i}") for i in range(3)), (req(0, [1], max_delay=2.0),), delays)
    for seed in range(5):
        p = solve_baseline(inst, seed=seed)
        assert {p[0].primary.mec, p[0].backup.mec} == {0, 1}


def test_baseline_deterministic():
    inst = build_instance(germany50(), 7, 20, 4)
    assert solve_baseline(inst, seed=9) == solve_baseline(inst, seed=9)
    assert solve_nsp_proxy(inst, seed=9) == solve_nsp_proxy(inst, seed=9)


def test_nsp_proxy_single_mec_server_disjoint():
    delays = dm({("B0", "H0"): 0.5, ("B1", "H0"): 0.5})
    inst = Instance((MecSite(0, "H0", (8, 8)),), (req(0, [2, 3]),), delays)
    p = solve_nsp_proxy(inst)
    a = p[0]
    assert a.primary.mec == a.backup.mec == 0
    assert not set(a.primary.servers) & set(a.backup.servers)
    assert check_feasibility(p, inst) == []


def test_nsp_proxy_single_server_forces_fallback():
    delays = dm({("B0", "H0"): 0.5, ("B0", "H1"): 1.0, ("B1", "H0"): 0.5, ("B1", "H1"): 1.0, ("H0", "H1"): 0.5})
    inst = Instance((MecSite(0, "H0", (8,)), MecSite(1, "H1", (8,))), (req(0, [2]),), delays)
    p = solve_nsp_proxy(inst)
    assert (p[0].primary.mec, p[0].backup.mec) == (0, 1)
    lone = Instance((MecSite(0, "H0", (8,)),), (req(0, [2]),), dm({("B0", "H0"): 0.5, ("B1", "H0"): 0.5}))
    assert solve_nsp_proxy(lone).rejected == (0,)


@pytest.mark.parametrize("solver", [solve_greedy, solve_baseline, solve_nsp_proxy])
def test_solvers_feasible_on_germany50(solver):
    net = germany50()
    d = all_pairs_delay(net)
    for seed in range(3):
        inst = build_instance(net, 7, 40, seed, delays=d)
        p = solver(inst, CostWeights(), seed)
        assert check_feasibility(p, inst) == []
        assert len(p.assignments) + len(p.rejected) == 40


def test_ensemble_ordering_small():
    net = germany50()
    d = all_pairs_delay(net)
    costs = {"greedy": [], "nsp": [], "baseline": []}
    for seed in range(6):
        inst, _ = admissible(build_instance(net, 7, 20, seed, delays=d))
        for name, solver in (("greedy", solve_greedy), ("nsp", solve_nsp_proxy), ("baseline", solve_baseline)):
            costs[name].append(total_cost(solver(inst, CostWeights(), seed), inst).total)
    m = {k: statistics.fmean(v) for k, v in costs.items()}
    assert m["greedy"] <= m["nsp"] <= m["baseline"]
