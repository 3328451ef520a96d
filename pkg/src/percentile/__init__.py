"""Percentile queries on multi-dimensional weighted MDPs.

A query asks for one strategy meeting several constraints
``P[f_l >= v] >= alpha`` at once; every solver returns a ``Verdict``
with a witness strategy and an exact certificate where one exists.
"""
from .graph import EndComponent, MecDecomposition, contract_mecs, max_end_components
from .horizon import NegativeWeights, PreciseDiscountUnsupported, ds_eps_gap_solve, sp_solve
from .io import DataError, parse_model, parse_query, parse_strategy
from .meanpayoff import mp_inf_solve, mp_sup_solve, solve_mean_payoff
from .model import (KINDS, MooreStrategy, PercentileConstraint, PercentileQuery, SymbolicStrategy,
                    WeightedMdp, induced_chain, validate_mdp)
from .oracle import brute_force_oracle
from .ratlp import LinearProgram, solve_linear_system, solve_lp
from .reach import (absorbing_multi_reach, acyclic_multi_reach, almost_sure_multi_reach, general_multi_reach,
                    nested_multi_reach)
from .regular import solve_regular
from .sim import estimate_percentiles, exact_verify_finite, minimize_memory, simulate_runs
from .solve import QueryError, solve_conjunction, solve_query
from .verdict import NO, UNKNOWN, YES, Verdict

__version__ = "0.1.0"

__all__ = [
    "EndComponent", "MecDecomposition", "contract_mecs", "max_end_components",
    "NegativeWeights", "PreciseDiscountUnsupported", "ds_eps_gap_solve", "sp_solve",
    "DataError", "parse_model", "parse_query", "parse_strategy",
    "mp_inf_solve", "mp_sup_solve", "solve_mean_payoff",
    "KINDS", "MooreStrategy", "PercentileConstraint", "PercentileQuery", "SymbolicStrategy",
    "WeightedMdp", "induced_chain", "validate_mdp",
    "brute_force_oracle",
    "LinearProgram", "solve_linear_system", "solve_lp",
    "absorbing_multi_reach", "acyclic_multi_reach", "almost_sure_multi_reach", "general_multi_reach",
    "nested_multi_reach",
    "solve_regular",
    "estimate_percentiles", "exact_verify_finite", "minimize_memory", "simulate_runs",
    "QueryError", "solve_conjunction", "solve_query",
    "NO", "UNKNOWN", "YES", "Verdict",
]
