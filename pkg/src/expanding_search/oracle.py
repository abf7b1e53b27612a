"""Exponential-time ground truth for small instances."""
from __future__ import annotations

import numpy as np

from .graph import ExpandingSearch, Instance, RootedTree, ekey, minimum_spanning_tree

DP_CAP = 20
ENUM_CAP = 12


class TooLargeError(ValueError):
    pass


def _popcount_layers(n: int) -> list[np.ndarray]:
    masks = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int8)
    for b in range(n):
        pc += ((masks >> b) & 1).astype(np.int8)
    return [masks[pc == k] for k in range(n + 1)]


def optimal_search_dp(inst: Instance, cap: int = DP_CAP) -> tuple[float, ExpandingSearch]:
    """Minimum search cost by dynamic programming over visited sets.

    Adding ``v`` to a visited set ``S`` costs the shortest edge from ``S`` to
    ``v`` times the mass not yet found, ``1 - p(S)``.  States are processed one
    cardinality layer at a time.
    """
    n = inst.n
    if n > cap:
        raise TooLargeError(f"{n} non-root vertices exceeds the oracle cap of {cap}")
    if n == 0:
        return 0.0, ExpandingSearch(())
    L = inst.length_matrix()
    p = inst.prob[1:]
    full = (1 << n) - 1
    layers = _popcount_layers(n)
    pos = np.zeros(1 << n, dtype=np.int64)
    g = np.full(1 << n, np.inf)
    choice = np.full(1 << n, -1, dtype=np.int8)
    mass = np.zeros(1 << n)
    g[0] = 0.0
    total = float(p.sum())
    # ml[i, v]: shortest edge from root + layer mask i to non-root vertex v
    ml = L[0, 1:][None, :].copy()
    for k in range(1, n + 1):
        cur = layers[k]
        pos[cur] = np.arange(len(cur))
        low = cur & -cur
        lowbit = np.log2(low).astype(np.int64)
        mass[cur] = mass[cur ^ low] + p[lowbit]
        best = np.full(len(cur), np.inf)
        arg = np.full(len(cur), -1, dtype=np.int8)
        for v in range(n):
            bit = 1 << v
            sel = (cur & bit) != 0
            src = cur[sel] ^ bit
            i = pos[src]
            step = ml[i, v]
            rem = np.maximum(total - mass[src], 0.0)
            with np.errstate(invalid="ignore"):
                val = g[src] + np.where(np.isinf(step), np.inf, step * rem)
            idx = np.flatnonzero(sel)
            better = val < best[idx]
            best[idx[better]] = val[better]
            arg[idx[better]] = v
        g[cur] = best
        choice[cur] = arg
        if k < n:
            i = pos[cur ^ low]
            ml = np.minimum(ml[i], L[lowbit + 1, 1:])
    # backtrack
    order = []
    S = full
    while S:
        v = int(choice[S])
        order.append(v + 1)
        S ^= 1 << v
    order.reverse()
    steps = []
    visited = [0]
    for v in order:
        u = min(visited, key=lambda w: (L[w, v], w))
        steps.append((u, v))
        visited.append(v)
    return float(g[full]), ExpandingSearch(tuple(steps))


def enumerate_searches(inst: Instance):
    """Yield every expanding search of ``inst`` (exponential; tests only)."""
    N = inst.N

    def rec(visited, steps):
        if len(steps) == N - 1:
            yield ExpandingSearch(tuple(steps))
            return
        for u in sorted(visited):
            for v in inst.adj[u]:
                if v not in visited:
                    visited.add(v)
                    steps.append((u, v))
                    yield from rec(visited, steps)
                    steps.pop()
                    visited.discard(v)

    yield from rec({0}, [])


def connected_rooted_sets(inst: Instance, cap: int = ENUM_CAP):
    """Yield every connected vertex set containing the root, as a sorted tuple."""
    if inst.n > cap:
        raise TooLargeError(f"{inst.n} non-root vertices exceeds the enumeration cap of {cap}")
    n = inst.n
    nbr = [0] * inst.N
    for u in range(inst.N):
        for v in inst.adj[u]:
            nbr[u] |= 1 << v
    for mask in range(1 << n):
        S = (mask << 1) | 1
        reach = 1
        frontier = 1
        while frontier:
            grow = 0
            f = frontier
            while f:
                b = f & -f
                grow |= nbr[b.bit_length() - 1]
                f ^= b
            new = grow & S & ~reach
            reach |= new
            frontier = new
        if reach == S:
            yield tuple(i for i in range(inst.N) if S >> i & 1)


def max_density_subtree_bruteforce(inst: Instance, cap: int = ENUM_CAP) -> tuple[RootedTree, float]:
    best = None
    for vs in connected_rooted_sets(inst, cap):
        if len(vs) == 1:
            continue
        tree = minimum_spanning_tree(inst, vs)
        d = tree.mass / tree.length
        if best is None or d > best[1]:
            best = (tree, d)
    if best is None:
        raise ValueError("graph has no edges")
    return best


def pcst_objective(tree: RootedTree, lengths, penalties) -> float:
    covered = tree.vertices
    return float(sum(lengths[ekey(v, u)] for v, u in tree.parent.items())
                 + sum(pen for v, pen in enumerate(penalties) if v not in covered))


def pcst_bruteforce(inst: Instance, lengths=None, penalties=None, cap: int = ENUM_CAP) -> tuple[RootedTree, float]:
    """Exact prize-collecting Steiner tree rooted at 0; returns the tree and its objective."""
    lengths = inst.lengths if lengths is None else lengths
    penalties = inst.prob if penalties is None else np.asarray(penalties, dtype=float)
    best = None
    for vs in connected_rooted_sets(inst, cap):
        tree = minimum_spanning_tree(inst, vs, lengths)
        tree = RootedTree(tree.parent, tree.plen, float(sum(penalties[v] for v in vs)))
        obj = pcst_objective(tree, lengths, penalties)
        if best is None or obj < best[1] - 1e-15:
            best = (tree, obj)
    return best


def brute_force_cost(inst: Instance) -> float:
    return min((_cost(inst, s) for s in enumerate_searches(inst)), default=0.0)


def _cost(inst, seq):
    t = c = 0.0
    for u, v in seq.steps:
        t += inst.length(u, v)
        c += inst.prob[v] * t
    return c


__all__ = [
    "optimal_search_dp",
    "enumerate_searches",
    "max_density_subtree_bruteforce",
    "pcst_bruteforce",
    "pcst_objective",
    "connected_rooted_sets",
    "brute_force_cost",
    "TooLargeError",
]
