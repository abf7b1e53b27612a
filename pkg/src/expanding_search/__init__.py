"""Expanding search on rooted edge-weighted graphs: exact branch-and-cut,
greedy approximation, local search and supporting tools."""
from .graph import (
    DisconnectedGraphError,
    ExpandingSearch,
    Instance,
    InstanceError,
    InvalidSearchError,
    ProbabilityError,
    RootedTree,
    contract,
    metric_closure,
    search_cost,
    validate_search,
)
from .treeseq import c_star, optimal_tree_search
from .oracle import optimal_search_dp
from .pcst import gw_pcst, parametric_search
from .greedy import greedy_search, greedy_upper_bound
from .localsearch import edge_swap_local_search, greedy_local_search, insertion_local_search
from .bnc import branch_and_cut, lp_lower_bound

__version__ = "0.1.0"
