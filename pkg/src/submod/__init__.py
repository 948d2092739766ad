"""Set-function oracles, continuous extensions, and submodular optimization."""

from .errors import BudgetError, ContractError, InputError, ParseError, SubmodError
from .setfn import (
    GroundSet,
    SetFunctionOracle,
    brute_optimize,
    check_property_bruteforce,
    make_coverage,
    make_function,
    make_graph_cut,
    make_modular,
    make_sum,
)

__all__ = [
    "BudgetError",
    "ContractError",
    "GroundSet",
    "InputError",
    "ParseError",
    "SetFunctionOracle",
    "SubmodError",
    "brute_optimize",
    "check_property_bruteforce",
    "make_coverage",
    "make_function",
    "make_graph_cut",
    "make_modular",
    "make_sum",
]
