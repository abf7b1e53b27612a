"""Rooted prize-collecting Steiner tree (primal-dual moat growing) and the
bisection search for a dense subtree built on top of it."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph import Edge, Instance, RootedTree, ekey

EVENT_TOL = 1e-12


def gw_pcst(inst: Instance, lengths: Mapping[Edge, float] | None = None, penalties=None) -> RootedTree:
    """Goemans-Williamson primal-dual algorithm for the rooted PCST.

    Components grow their duals at unit rate until an edge between two
    components becomes tight (merge) or the component's dual reaches its total
    penalty (deactivate).  The root's component never grows.  Afterwards the
    root's tree is pruned of every deactivated set hanging on a single edge.

    The returned tree uses ``inst``'s own lengths and probabilities.
    """
    lengths = inst.lengths if lengths is None else lengths
    penalties = inst.prob if penalties is None else np.asarray(penalties, dtype=float)
    N = inst.N
    edge_list = inst.edges
    if not edge_list:
        return RootedTree.root_only()
    eu = np.array([u for u, _ in edge_list])
    ev = np.array([v for _, v in edge_list])
    ec = np.array([lengths[e] for e in edge_list], dtype=float)

    comp = np.arange(N)
    load = np.zeros(N)
    active = np.ones(N, dtype=bool)
    active[0] = False
    ysum = np.zeros(N)
    pen = np.array(penalties, dtype=float)
    members = {v: [v] for v in range(N)}
    labels: list[frozenset[int]] = []
    forest: list[Edge] = []

    while active.any():
        act = active[comp].astype(float)
        rate = act[eu] + act[ev]
        live = (comp[eu] != comp[ev]) & (rate > 0)
        t_edge = np.full(len(ec), np.inf)
        t_edge[live] = (ec[live] - load[eu[live]] - load[ev[live]]) / rate[live]
        t_comp = np.where(active, pen - ysum, np.inf)
        te = t_edge.min()
        tc = t_comp.min()
        if te <= tc + EVENT_TOL:
            dt = max(te, 0.0)
            k = int(np.flatnonzero(t_edge <= te + EVENT_TOL)[0])
        else:
            dt = max(tc, 0.0)
            k = -1
        load += dt * act
        ysum[active] += dt
        if k >= 0:
            a, b = comp[eu[k]], comp[ev[k]]
            forest.append(edge_list[k])
            keep, gone = (a, b) if a < b else (b, a)
            comp[members[gone]] = keep
            members[keep].extend(members.pop(gone))
            ysum[keep] += ysum[gone]
            pen[keep] += pen[gone]
            active[gone] = False
            active[keep] = keep != comp[0]
        else:
            c = int(np.flatnonzero(t_comp <= tc + EVENT_TOL)[0])
            active[c] = False
            labels.append(frozenset(members[c]))

    return _prune(inst, forest, labels)


def _prune(inst: Instance, forest: list[Edge], labels: list[frozenset[int]]) -> RootedTree:
    adj: dict[int, set[int]] = {}
    for u, v in forest:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    # keep only the root's component
    keep = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in keep:
                keep.add(v)
                stack.append(v)
    edges = {e for e in forest if e[0] in keep}
    changed = True
    while changed:
        changed = False
        for X in reversed(labels):
            inside = X & keep
            if not inside:
                continue
            boundary = sum(1 for u, v in edges if (u in inside) != (v in inside))
            if boundary == 1:
                keep -= inside
                edges = {e for e in edges if e[0] in keep and e[1] in keep}
                changed = True
    return RootedTree.from_edges(inst, edges)


def gw_objective(tree: RootedTree, lengths, penalties, factor: float = 1.0) -> float:
    """``lambda(T) + factor * penalty(V minus V[T])``."""
    covered = tree.vertices
    return float(sum(lengths[ekey(v, u)] for v, u in tree.parent.items())
                 + factor * sum(p for v, p in enumerate(penalties) if v not in covered))


def initial_tree(inst: Instance) -> RootedTree:
    """Shortest-path tree from the root, trimmed to branches carrying probability."""
    N = inst.N
    dist = [math.inf] * N
    parent: dict[int, int] = {}
    dist[0] = 0.0
    heap = [(0.0, 0)]
    done = [False] * N
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v in inst.adj[u]:
            nd = d + inst.length(u, v)
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    useful = set()
    for v in range(1, N):
        if inst.prob[v] > 0:
            while v != 0 and v not in useful:
                useful.add(v)
                v = parent[v]
    return RootedTree.from_edges(inst, [(parent[v], v) for v in useful])


@dataclass(frozen=True)
class ParametricState:
    alpha: float
    beta: float
    rho: float | None
    best_tree: RootedTree
    epsilon: float


def parametric_search(inst: Instance, epsilon: float | None = None, history: list | None = None) -> RootedTree:
    """Approximate maximum-density subtree by bisection over the density guess.

    Each guess ``rho`` is tested with a PCST run on lengths ``rho * length``
    and penalties equal to the probabilities.  ``history`` (if given) receives
    a :class:`ParametricState` at every loop head and one after the loop.
    """
    n = inst.n
    if n == 0 or not np.any(inst.prob > 0):
        raise ValueError("undefined density: no vertex carries probability")
    if epsilon is None:
        epsilon = 1.0 / (2 * n - 1)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    f = 2.0 - 1.0 / n
    best = initial_tree(inst)
    alpha = f * best.mass / best.length
    beta = max(max(inst.prob[u], inst.prob[v]) / length for (u, v), length in inst.lengths.items())
    rho = None
    while beta > (1 + epsilon) * alpha:
        if history is not None:
            history.append(ParametricState(alpha, beta, rho, best, epsilon))
        rho = (alpha + beta) / 2
        scaled = {e: rho * length for e, length in inst.lengths.items()}
        tree = gw_pcst(inst, scaled, inst.prob)
        if f * tree.mass <= rho * tree.length:
            beta = rho
        else:
            alpha = f * tree.mass / tree.length
            best = tree
    if history is not None:
        history.append(ParametricState(alpha, beta, rho, best, epsilon))
    return best
