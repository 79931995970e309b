"""Bilevel bi-objective evolutionary optimization with Pareto-set prediction."""

from .framework import RunConfig, RunResult, run, vaa_check
from .metrics import HvTerminationMonitor, IgdTerminationMonitor, hv2d, igd, normalized_ll_igd
from .problems import BilevelProblem, ProblemConfig, generate_true_pf, make_problem, spec_toy1
from .psp import PspModel, build_dataset, load_model, predict_ps, save_model, train
from .stats import rank_sum_test

__all__ = [
    "BilevelProblem",
    "HvTerminationMonitor",
    "IgdTerminationMonitor",
    "ProblemConfig",
    "PspModel",
    "RunConfig",
    "RunResult",
    "build_dataset",
    "generate_true_pf",
    "hv2d",
    "igd",
    "load_model",
    "make_problem",
    "normalized_ll_igd",
    "predict_ps",
    "rank_sum_test",
    "run",
    "save_model",
    "spec_toy1",
    "train",
    "vaa_check",
]

__version__ = "0.1.0"
