"""Greedy expanding search: repeatedly search an approximately densest subtree
of the graph with the visited region contracted into the root."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .graph import Contraction, ExpandingSearch, Instance, RootedTree, contract, validate_search
from .pcst import parametric_search
from .treeseq import optimal_tree_search


@dataclass(frozen=True)
class GreedyIteration:
    tree: RootedTree  # in the contracted graph
    contraction: Contraction
    visited: frozenset[int]  # original ids searched before this iteration
    length: float
    mass: float
    remaining: float
    price: float


@dataclass
class GreedyTrace:
    iterations: list[GreedyIteration] = field(default_factory=list)
    epsilon: float = 0.0

    @property
    def approx_factor(self) -> float:
        """Density guarantee of the subtree routine, ``(1 + eps)(2 - 1/n)``."""
        n = self.n
        return (1 + self.epsilon) * (2 - 1 / n) if n else 1.0

    n: int = 0


def greedy_search(inst: Instance, epsilon: float | None = None) -> tuple[ExpandingSearch, GreedyTrace]:
    n = inst.n
    if epsilon is None:
        epsilon = 1.0 / (2 * n - 1) if n else 1.0
    trace = GreedyTrace(epsilon=epsilon, n=n)
    visited = {0}
    steps: list[tuple[int, int]] = []
    while any(inst.prob[v] > 0 for v in range(inst.N) if v not in visited):
        con = contract(inst, visited)
        sub = con.instance
        tree = parametric_search(sub, epsilon)
        seq, _ = optimal_tree_search(sub, tree)
        remaining = float(sub.prob.sum())
        mass = tree.mass
        length = tree.length
        trace.iterations.append(GreedyIteration(tree, con, frozenset(visited), length, mass, remaining,
                                                remaining * length / mass))
        for u, v in seq.steps:
            a, b = con.lift_edge(u, v)
            steps.append((a, b))
            visited.add(b)
    steps.extend(_attach_rest(inst, visited))
    result = ExpandingSearch(tuple(steps))
    validate_search(inst, result)
    return result, trace


def _attach_rest(inst: Instance, visited: set[int]) -> list[tuple[int, int]]:
    """Prim-style completion with zero-probability leftovers (cost unchanged)."""
    out = []
    visited = set(visited)
    heap = []
    for u in visited:
        for v in inst.adj[u]:
            if v not in visited:
                heap.append((inst.length(u, v), u, v))
    heapq.heapify(heap)
    while heap:
        _, u, v = heapq.heappop(heap)
        if v in visited:
            continue
        visited.add(v)
        out.append((u, v))
        for w in inst.adj[v]:
            if w not in visited:
                heapq.heappush(heap, (inst.length(v, w), v, w))
    return out


def greedy_upper_bound(trace: GreedyTrace) -> float:
    """Sum over iterations of tree mass times price."""
    return float(sum(it.mass * it.price for it in trace.iterations))
