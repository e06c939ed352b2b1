"""Online unconstrained submodular maximization with stochastic bandit feedback."""

__version__ = "0.1.0"

from .algorithms import DgEtc, Rgl, dg_offline, dg_repeated, dg_sample, run_dgetc, run_rgl, upd_exp
from .env import Environment, NoiseModel, RngStream, make_environment
from .itemset import ItemSet
from .setfn import (
    ExampleFamilyParams,
    FunctionDescriptor,
    SetFunction,
    brute_force_optimum,
    check_submodular,
    compute_hardness,
    make_example_family,
)

__all__ = [
    "DgEtc",
    "Environment",
    "ExampleFamilyParams",
    "FunctionDescriptor",
    "ItemSet",
    "NoiseModel",
    "Rgl",
    "RngStream",
    "SetFunction",
    "brute_force_optimum",
    "check_submodular",
    "compute_hardness",
    "dg_offline",
    "dg_repeated",
    "dg_sample",
    "make_environment",
    "make_example_family",
    "run_dgetc",
    "run_rgl",
    "upd_exp",
]
