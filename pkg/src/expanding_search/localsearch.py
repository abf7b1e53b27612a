"""Local search over spanning trees of the metric closure, and the
insertion-based permutation local search used as a baseline."""
from __future__ import annotations

from typing import NamedTuple, Sequence

from .graph import (
    ExpandingSearch,
    Instance,
    InstanceError,
    MetricClosure,
    RootedTree,
    ekey,
    fundamental_cycle,
    metric_closure,
    search_cost,
    validate_search,
)
from .treeseq import optimal_tree_search, tree_cost_from_edges

IMPROVE_TOL = 1e-9


class LocalSearchResult(NamedTuple):
    tree: RootedTree
    sequence: ExpandingSearch  # in the original graph
    cost: float  # of ``sequence`` in the original graph
    tree_cost: float  # c* of ``tree`` in the closure
    swaps: int


def convert_to_graph_sequence(closure: MetricClosure, closure_seq: ExpandingSearch) -> ExpandingSearch:
    """Expand closure edges into witness shortest paths, skipping edges that
    would join two already-searched vertices."""
    visited = {0}
    steps = []
    for u, v in closure_seq.steps:
        path = closure.path(u, v)
        for a, b in zip(path, path[1:]):
            if b in visited:
                continue
            steps.append((a, b))
            visited.add(b)
    seq = ExpandingSearch(tuple(steps))
    validate_search(closure.graph, seq)
    return seq


def edge_swap_local_search(closure: MetricClosure, T0: RootedTree | None = None, max_swaps: int | None = None) -> LocalSearchResult:
    """Swap one closure edge into the tree and one cycle edge out while c* improves.

    Non-tree edges are scanned in ascending (length, edge) order; for the
    scanned edge the best removal on its fundamental cycle is applied, after
    which the scan restarts.
    """
    inst = closure.instance
    lengths = inst.lengths
    prob = inst.prob
    N = inst.N
    if T0 is None:
        from .greedy import greedy_search

        seq, _ = greedy_search(closure.graph)
        T0 = RootedTree.from_edges(inst, [(u, v) for u, v in seq.steps])
    if len(T0.parent) != N - 1:
        raise InstanceError("start tree does not span the instance")
    memo: dict[frozenset, float] = {}

    def cost_of(edges: frozenset) -> float:
        c = memo.get(edges)
        if c is None:
            c = memo[edges] = tree_cost_from_edges(prob, edges, lengths, N)
        return c

    edges = frozenset(ekey(v, u) for v, u in T0.parent.items())
    tree = RootedTree.from_edges(inst, edges)
    current = cost_of(edges)
    order = sorted(lengths, key=lambda e: (lengths[e], e))
    swaps = 0
    pending = [e for e in order if e not in edges]
    pos = 0
    while pos < len(pending):
        e = pending[pos]
        best_cost, best_edges = current, None
        for out in fundamental_cycle(tree, e)[:-1]:
            cand = (edges - {out}) | {e}
            c = cost_of(cand)
            if c < best_cost:
                best_cost, best_edges = c, cand
        if best_edges is not None and best_cost < current - IMPROVE_TOL * max(1.0, abs(current)):
            edges, current = best_edges, best_cost
            tree = RootedTree.from_edges(inst, edges)
            swaps += 1
            pending = [x for x in order if x not in edges]
            pos = 0
            if max_swaps is not None and swaps >= max_swaps:
                break
        else:
            pos += 1
    closure_seq, tree_cost = optimal_tree_search(inst, tree)
    seq = convert_to_graph_sequence(closure, closure_seq)
    return LocalSearchResult(tree, seq, search_cost(closure.graph, seq), tree_cost, swaps)


def is_swap_local_optimum(closure: MetricClosure, tree: RootedTree) -> bool:
    """Exhaustive re-scan of every (add, remove) pair."""
    inst = closure.instance
    edges = frozenset(tree.edges)
    base = tree_cost_from_edges(inst.prob, edges, inst.lengths, inst.N)
    for e in inst.lengths:
        if e in edges:
            continue
        for out in fundamental_cycle(tree, e)[:-1]:
            c = tree_cost_from_edges(inst.prob, (edges - {out}) | {e}, inst.lengths, inst.N)
            if c < base - IMPROVE_TOL * max(1.0, abs(base)):
                return False
    return True


def greedy_local_search(inst: Instance) -> tuple[ExpandingSearch, float]:
    """Greedy solution improved by the edge-swap local search."""
    from .greedy import greedy_search

    seq, _ = greedy_search(inst)
    if inst.n < 2:
        return seq, search_cost(inst, seq)
    closure = metric_closure(inst)
    T0 = RootedTree.from_edges(closure.instance, [(u, v) for u, v in seq.steps])
    res = edge_swap_local_search(closure, T0)
    g = search_cost(inst, seq)
    if res.cost <= g:
        return res.sequence, res.cost
    return seq, g


# ---------------------------------------------------------------------------
# insertion neighbourhood on permutations


def permutation_tree(inst: Instance, perm: Sequence[int]) -> RootedTree:
    """Connect each vertex to the earlier vertex with the shortest edge."""
    if perm[0] != 0 or sorted(perm) != list(range(inst.N)):
        raise ValueError("permutation must list every vertex, starting with the root")
    parent, plen = {}, {}
    for k in range(1, len(perm)):
        v = perm[k]
        u = min(perm[:k], key=lambda w: (inst.length(w, v), w))
        parent[v] = u
        plen[v] = inst.length(u, v)
    return RootedTree(parent, plen, inst.mass(perm))


def permutation_cost(inst: Instance, perm: Sequence[int]) -> float:
    tree = permutation_tree(inst, perm)
    return optimal_tree_search(inst, tree)[1]


def insertion_local_search(closure_inst: Instance, pi0: Sequence[int]) -> tuple[list[int], float]:
    """Move single vertices to earlier positions while ``c*(T^pi)`` improves.

    ``closure_inst`` must be complete (a metric closure).
    """
    perm = list(pi0)
    current = permutation_cost(closure_inst, perm)
    improved = True
    while improved:
        improved = False
        for j in range(2, len(perm)):
            for i in range(1, j):
                cand = perm[:i] + [perm[j]] + perm[i:j] + perm[j + 1:]
                c = permutation_cost(closure_inst, cand)
                if c < current - IMPROVE_TOL * max(1.0, abs(current)):
                    perm, current = cand, c
                    improved = True
                    break
            if improved:
                break
    return perm, current


def is_insertion_local_optimum(closure_inst: Instance, perm: Sequence[int]) -> bool:
    perm = list(perm)
    base = permutation_cost(closure_inst, perm)
    for j in range(2, len(perm)):
        for i in range(1, j):
            cand = perm[:i] + [perm[j]] + perm[i:j] + perm[j + 1:]
            if permutation_cost(closure_inst, cand) < base - IMPROVE_TOL * max(1.0, abs(base)):
                return False
    return True
