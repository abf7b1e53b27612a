"""Optimal expanding search on a rooted tree.

The tree problem is single-machine sequencing with out-tree precedences
(weight = vertex probability, processing time = parent edge length).  It is
solved by repeatedly merging the densest cluster into its parent's cluster.
"""
from __future__ import annotations

import heapq

from .graph import ExpandingSearch, Instance, InstanceError, RootedTree, ekey


def tree_order(prob, tree: RootedTree) -> list[int]:
    """Optimal visiting order of the tree's non-root vertices."""
    root = tree.root
    parent = tree.parent
    # cluster state lives on the cluster's head vertex
    head = {v: v for v in parent}
    head[root] = root
    seq = {v: [v] for v in parent}
    seq[root] = []
    mass = {v: float(prob[v]) for v in parent}
    length = dict(tree.plen)
    minid = {v: v for v in parent}
    version = {v: 0 for v in parent}

    def find(v):
        while head[v] != v:
            head[v] = head[head[v]]
            v = head[v]
        return v

    heap = [(-mass[v] / length[v], v, 0, v) for v in parent]
    heapq.heapify(heap)
    while heap:
        _, _, ver, c = heapq.heappop(heap)
        if head[c] != c or ver != version[c]:
            continue
        p = find(parent[c])
        head[c] = p
        seq[p].extend(seq[c])
        del seq[c]
        if p == root:
            continue
        mass[p] += mass[c]
        length[p] += length[c]
        minid[p] = min(minid[p], minid[c])
        version[p] += 1
        heapq.heappush(heap, (-mass[p] / length[p], minid[p], version[p], p))
    return seq[root]


def optimal_tree_search(inst: Instance, tree: RootedTree | None = None) -> tuple[ExpandingSearch, float]:
    """Cost-minimising expanding search of ``tree`` (default: ``inst`` itself, which must be a tree)."""
    if tree is None:
        if not inst.is_tree():
            raise InstanceError("instance edge set is not a tree")
        tree = RootedTree.from_edges(inst, inst.edges)
    order = tree_order(inst.prob, tree)
    steps = tuple((tree.parent[v], v) for v in order)
    t = cost = 0.0
    for v in order:
        t += tree.plen[v]
        cost += inst.prob[v] * t
    return ExpandingSearch(steps), float(cost)


def c_star(inst: Instance, tree: RootedTree) -> float:
    """Optimal search cost of a spanning tree (lengths taken from the tree)."""
    if len(tree.parent) != inst.N - 1:
        raise InstanceError("tree does not span the instance")
    return optimal_tree_search(inst, tree)[1]


def tree_cost_from_edges(prob, edges, lengths, N: int) -> float:
    """c* for a spanning tree given only as an undirected edge collection.

    Hot path of the local search; skips all validation.
    """
    adj: list[list[int]] = [[] for _ in range(N)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = {}
    plen = {}
    stack = [0]
    seen = [False] * N
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                plen[v] = lengths[ekey(u, v)]
                stack.append(v)
    tree = RootedTree(parent, plen)
    t = cost = 0.0
    for v in tree_order(prob, tree):
        t += plen[v]
        cost += prob[v] * t
    return float(cost)
