"""Resilient primary/backup network slice placement on MEC servers."""

from .evaluation import FailureScenario, availability, evaluate, resource_usage, throughput
from .exact import ExactConfig, ExactResult, InfeasibleInstance, solve_exact
from .experiment import ExperimentConfig, emit_plot_data, run_experiment
from .ga import GaConfig, MgaResult, crossover, mga_init, mutate, solve_mga
from .heuristics import solve_baseline, solve_greedy, solve_nsp_proxy
from .model import (MC, SC, CostWeights, Instance, MecSite, Placement, SliceRequest, Vnf, build_instance,
                    check_feasibility, total_cost)
from .topology import DelayMatrix, Network, all_pairs_delay, germany50, load_sndlib, parse_sndlib, select_mec_sites

__all__ = [
    "MC", "SC", "CostWeights", "DelayMatrix", "ExactConfig", "ExactResult", "ExperimentConfig",
    "FailureScenario", "GaConfig", "InfeasibleInstance", "Instance", "MecSite", "MgaResult", "Network",
    "Placement", "SliceRequest", "Vnf", "all_pairs_delay", "availability", "build_instance",
    "check_feasibility", "crossover", "emit_plot_data", "evaluate", "germany50", "load_sndlib", "mga_init",
    "mutate", "parse_sndlib", "resource_usage", "run_experiment", "select_mec_sites", "solve_baseline",
    "solve_exact", "solve_greedy", "solve_mga", "solve_nsp_proxy", "throughput", "total_cost",
]
