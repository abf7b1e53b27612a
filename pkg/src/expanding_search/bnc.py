"""Exact solver: LP relaxation of the tree-selection/sequencing MIP,
directed-cut separation by max-flow, and branching on arcs."""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .flow import FlowNetwork, max_flow_min_cut
from .graph import ExpandingSearch, Instance, RootedTree, ekey, minimum_spanning_tree, search_cost
from .lp import FEAS_TOL, INT_TOL, LpModel, LpSolution, solve
from .treeseq import optimal_tree_search

log = logging.getLogger(__name__)

FULL_TRIANGLE_LIMIT = 30
MAX_CUTS_PER_ROUND = 50
STALL_ROUNDS = 3
CUT_CONFIGS = ("none", "c1", "c2", "c1c2")


@dataclass(frozen=True)
class Cut:
    """A violated inequality found by separation.

    ``family`` is ``"C1"`` (needs ``k``), ``"C2"`` or ``"tri"`` (lazy ordering
    triangle; ``S`` then holds the vertex triple in cyclic order).
    """

    family: str
    S: frozenset[int]
    k: int | None
    coefs: dict = field(hash=False, compare=False)
    rhs: float = field(default=0.0, hash=False, compare=False)
    violation: float = field(default=0.0, hash=False, compare=False)

    @property
    def key(self):
        return (self.family, self.S, self.k)


class Relaxation:
    """LP relaxation of the MIP together with its column maps.

    ``delta`` columns exist for non-root pairs ``i < j`` only: the pair
    equality lets ``delta[j, i]`` be written as ``1 - delta[i, j]``, and the root
    is fixed to come first.
    """

    def __init__(self, inst: Instance, c2_static: bool = True, full_triangles: bool | None = None):
        self.inst = inst
        N = inst.N
        self.model = m = LpModel()
        self.arcs: list[tuple[int, int]] = []
        for u, v in inst.edges:
            for a, b in ((u, v), (v, u)):
                if b != 0:
                    self.arcs.append((a, b))
        self.arcs.sort()
        self.delta = {}
        for i in range(1, N):
            for j in range(i + 1, N):
                self.delta[i, j] = m.add_column(f"d_{i}_{j}")
        self.z = {j: m.add_column(f"z_{j}") for j in range(1, N)}
        self.x = {a: m.add_column(f"x_{a[0]}_{a[1]}") for a in self.arcs}
        self.y = {a: m.add_column(f"y_{a[0]}_{a[1]}", obj=inst.length(*a)) for a in self.arcs}
        self.into = {j: [a for a in self.arcs if a[1] == j] for j in range(1, N)}
        if full_triangles is None:
            full_triangles = inst.n <= FULL_TRIANGLE_LIMIT
        self.lazy_triangles = not full_triangles
        if full_triangles:
            for i, j, k in itertools.combinations(range(1, N), 3):
                for a, b, c in ((i, j, k), (i, k, j)):
                    self._add_expr(self.triangle(a, b, c), ">=", 1.0, "tri")
        p = inst.prob
        for i in range(1, N):
            terms = [({self.z[i]: 1.0}, 0.0)]
            for j in range(1, N):
                if j != i and p[j] != 0:
                    terms.append(self.scaled(self.delta_expr(i, j), -p[j]))
            self._add_expr(self.combine(terms), "=", p[i], "prob")
        for j in range(1, N):
            m.add_row({self.x[a]: 1.0 for a in self.into[j]}, "=", 1.0, f"in_{j}")
            row = {self.y[a]: 1.0 for a in self.into[j]}
            row[self.z[j]] = -1.0
            m.add_row(row, "=", 0.0, f"reach_{j}")
        for a in self.arcs:
            m.add_row({self.y[a]: 1.0, self.x[a]: -1.0}, "<=", 0.0, "y_le_x")
            if a[0] != 0:
                coefs, const = self.delta_expr(*a)
                coefs = {c: -v for c, v in coefs.items()}
                coefs[self.x[a]] = 1.0
                m.add_row(coefs, "<=", const, "x_le_d")
        if c2_static:
            for j, k in self.arcs:
                if j != 0:
                    m.add_row({self.z[j]: 1.0, self.y[j, k]: -1.0}, ">=", p[j], "outflow")

    # -- linear expressions over delta ------------------------------------
    def delta_expr(self, i: int, j: int) -> tuple[dict, float]:
        """``delta_ij`` as ``(coefs, constant)``."""
        if i == 0:
            return {}, 1.0
        if j == 0:
            return {}, 0.0
        if i < j:
            return {self.delta[i, j]: 1.0}, 0.0
        return {self.delta[j, i]: -1.0}, 1.0

    @staticmethod
    def scaled(expr, factor):
        coefs, const = expr
        return {c: v * factor for c, v in coefs.items()}, const * factor

    @staticmethod
    def combine(exprs):
        out: dict[int, float] = {}
        const = 0.0
        for coefs, c in exprs:
            const += c
            for k, v in coefs.items():
                out[k] = out.get(k, 0.0) + v
        return out, const

    def triangle(self, a, b, c):
        return self.combine([self.delta_expr(a, b), self.delta_expr(b, c), self.delta_expr(c, a)])

    def _add_expr(self, expr, sense, rhs, name):
        coefs, const = expr
        self.model.add_row({k: v for k, v in coefs.items() if v != 0}, sense, rhs - const, name)

    # -- values -----------------------------------------------------------
    def delta_matrix(self, xv) -> np.ndarray:
        N = self.inst.N
        D = np.zeros((N, N))
        D[0, 1:] = 1.0
        for (i, j), col in self.delta.items():
            D[i, j] = xv[col]
            D[j, i] = 1.0 - xv[col]
        return D

    def cut_row(self, S, k=None) -> dict[int, float]:
        row = {self.y[a]: 1.0 for a in self.arcs if a[0] in S and a[1] not in S}
        if k is not None:
            row[self.z[k]] = row.get(self.z[k], 0.0) - 1.0
        return row

    def vector_from_search(self, seq: ExpandingSearch) -> np.ndarray:
        """Integral MIP point encoding an expanding search."""
        p = self.inst.prob
        order = seq.order
        pos = {v: t for t, v in enumerate(order)}
        xv = np.zeros(self.model.num_cols)
        for (i, j), col in self.delta.items():
            xv[col] = 1.0 if pos[i] < pos[j] else 0.0
        zval = {}
        remaining = float(p.sum())
        for v in order:
            zval[v] = remaining
            remaining -= p[v]
        for j, col in self.z.items():
            xv[col] = zval[j]
        for u, v in seq.steps:
            xv[self.x[u, v]] = 1.0
            xv[self.y[u, v]] = zval[v]
        return xv


def build_relaxation(inst: Instance, c2_static: bool = True) -> Relaxation:
    return Relaxation(inst, c2_static=c2_static)


def build_tree_lp(inst: Instance, tree: RootedTree | None = None) -> tuple[LpModel, Relaxation]:
    """LP for sequencing on a fixed spanning tree: ordering, triangle, precedence
    and probability rows, objective sum of arc length times reach probability."""
    if tree is None:
        tree = RootedTree.from_edges(inst, inst.edges)
    N = inst.N
    m = LpModel()
    r = Relaxation.__new__(Relaxation)
    r.inst, r.model = inst, m
    r.delta = {}
    for i in range(1, N):
        for j in range(i + 1, N):
            r.delta[i, j] = m.add_column(f"d_{i}_{j}")
    r.z = {j: m.add_column(f"z_{j}", obj=tree.plen[j]) for j in range(1, N)}
    for i, j, k in itertools.combinations(range(1, N), 3):
        for a, b, c in ((i, j, k), (i, k, j)):
            r._add_expr(r.triangle(a, b, c), ">=", 1.0, "tri")
    for j, i in tree.parent.items():
        if i != 0:
            coefs, const = r.delta_expr(i, j)
            r._add_expr((coefs, const), "=", 1.0, "prec")
    p = inst.prob
    for i in range(1, N):
        terms = [({r.z[i]: 1.0}, 0.0)]
        for j in range(1, N):
            if j != i and p[j] != 0:
                terms.append(r.scaled(r.delta_expr(i, j), -p[j]))
        r._add_expr(r.combine(terms), "=", p[i], "prob")
    return m, r


# ---------------------------------------------------------------------------
# separation


def _y_arcs(rel: Relaxation, xv, scale=1.0):
    return [(i, j, max(float(xv[rel.y[i, j]]), 0.0)) for i, j in rel.arcs if xv[rel.y[i, j]] > 1e-12]


def separate_c1(rel: Relaxation, xv, tol: float = FEAS_TOL) -> list[Cut]:
    inst = rel.inst
    arcs = _y_arcs(rel, xv)
    cuts = []
    for k in range(1, inst.N):
        zk = float(xv[rel.z[k]])
        if zk <= tol:
            continue
        flow, side = max_flow_min_cut(FlowNetwork(inst.N, tuple(arcs), 0, k))
        if flow < zk - tol:
            S = frozenset(side)
            cuts.append(Cut("C1", S, k, rel.cut_row(S, k), 0.0, zk - flow))
    return cuts


def separate_c2(rel: Relaxation, xv, tol: float = FEAS_TOL) -> list[Cut]:
    inst = rel.inst
    t = inst.N
    arcs = _y_arcs(rel, xv) + [(i, t, float(inst.prob[i])) for i in range(1, inst.N) if inst.prob[i] > 0]
    total = float(inst.prob.sum())
    flow, side = max_flow_min_cut(FlowNetwork(inst.N + 1, tuple(arcs), 0, t))
    if flow < total - tol:
        S = frozenset(side - {t})
        rhs = float(sum(inst.prob[i] for i in range(inst.N) if i not in S))
        return [Cut("C2", S, None, rel.cut_row(S), rhs, total - flow)]
    return []


def separate_triangles(rel: Relaxation, xv, tol: float = FEAS_TOL, limit: int = 200) -> list[Cut]:
    D = rel.delta_matrix(xv)[1:, 1:]
    # s[i,j,k] = D[i,j] + D[j,k] + D[k,i]
    s = D[:, :, None] + D[None, :, :] + D.T[:, None, :]
    viol = 1.0 - s
    idx = np.argwhere(viol > tol)
    cuts = {}
    for i, j, k in idx:
        if i == j or j == k or i == k:
            continue
        # canonical cyclic rotation starting at the smallest vertex
        tri = (i + 1, j + 1, k + 1)
        r = tri.index(min(tri))
        tri = tri[r:] + tri[:r]
        if tri in cuts:
            continue
        coefs, const = rel.triangle(*tri)
        # the second vertex of the rotated triple fixes the orientation
        cuts[tri] = Cut("tri", frozenset(tri), tri[1], coefs, 1.0 - const, float(viol[i, j, k]))
    return sorted(cuts.values(), key=lambda c: -c.violation)[:limit]


# ---------------------------------------------------------------------------
# cutting-plane loop and branch-and-cut


@dataclass
class BnCNode:
    fixed: frozenset = frozenset()
    forbidden: frozenset = frozenset()
    bound: float = -np.inf
    depth: int = 0


@dataclass
class CutStats:
    counts: dict = field(default_factory=lambda: {"C1": 0, "C2": 0, "tri": 0})
    pool: set = field(default_factory=set)
    rounds: int = 0


def apply_node(rel: Relaxation, node: BnCNode):
    for a, col in rel.x.items():
        if a in node.fixed:
            rel.model.set_bounds(col, 1.0, 1.0)
        elif a in node.forbidden:
            rel.model.set_bounds(col, 0.0, 0.0)
        else:
            rel.model.set_bounds(col, 0.0, 1.0)


def cutting_plane_loop(rel: Relaxation, node: BnCNode | None = None, families=("C1", "C2"),
                       stats: CutStats | None = None, cutoff: float = np.inf,
                       deadline: float = np.inf) -> LpSolution:
    """Solve, separate, add rows; repeat until nothing is violated or progress stalls.

    Returns the last LP solution (status ``infeasible`` signals a node to fathom).
    """
    if node is not None:
        apply_node(rel, node)
    stats = stats if stats is not None else CutStats()
    m = rel.model
    sol = solve(m)
    stall = 0
    while sol.optimal:
        if sol.objective >= cutoff or time.monotonic() > deadline:
            break
        found: list[Cut] = []
        if "C1" in families:
            found += separate_c1(rel, sol.x)
        if "C2" in families:
            found += separate_c2(rel, sol.x)
        if rel.lazy_triangles:
            found += separate_triangles(rel, sol.x)
        fresh = [c for c in sorted(found, key=lambda c: -c.violation) if c.key not in stats.pool]
        fresh = fresh[:MAX_CUTS_PER_ROUND]
        if not fresh:
            break
        for c in fresh:
            stats.pool.add(c.key)
            stats.counts[c.family] += 1
            m.add_row(c.coefs, ">=", c.rhs, c.family)
        stats.rounds += 1
        prev = sol.objective
        sol = solve(m)
        if sol.optimal and sol.objective - prev < 1e-9:
            stall += 1
            if stall >= STALL_ROUNDS:
                break
        else:
            stall = 0
    return sol


def lp_lower_bound(inst: Instance, cut_config: str = "c1c2") -> float:
    """Root-node bound of the relaxation under one cut configuration."""
    if cut_config not in CUT_CONFIGS:
        raise ValueError(f"cut_config must be one of {CUT_CONFIGS}")
    if inst.n == 0:
        return 0.0
    families = {"none": (), "c1": ("C1",), "c2": ("C2",), "c1c2": ("C1", "C2")}[cut_config]
    rel = Relaxation(inst, c2_static="C2" in families)
    sol = cutting_plane_loop(rel, families=families)
    if not sol.optimal:
        raise RuntimeError(f"root relaxation not solved: {sol.status}")
    return sol.objective


@dataclass
class SolveReport:
    cost: float
    sequence: ExpandingSearch
    lower_bound: float
    nodes: int
    cuts: dict
    wall_time: float
    status: str

    @property
    def gap(self) -> float:
        if self.cost <= 0:
            return 0.0
        return min(max((self.cost - self.lower_bound) / self.cost, 0.0), 1.0)


def _tree_from_x(rel: Relaxation, xv, threshold=0.5):
    parent = {}
    for j in range(1, rel.inst.N):
        best = max(rel.into[j], key=lambda a: (xv[rel.x[a]], -a[0]))
        if xv[rel.x[best]] <= threshold - 1e-12 and threshold > 0:
            return None
        parent[j] = best[0]
    try:
        return RootedTree.from_edges(rel.inst, [(i, j) for j, i in parent.items()])
    except ValueError:
        return None


def branch_and_cut(inst: Instance, time_limit: float = 1200.0, incumbent: ExpandingSearch | None = None,
                   families=("C1", "C2"), verbose: bool = False, warm_start: bool = True) -> SolveReport:
    """Best-bound branch-and-cut on arc variables.

    Without an explicit incumbent the greedy + local search solution is used
    as warm start (``warm_start=False``: the optimal search of a minimum
    spanning tree instead).
    """
    start = time.monotonic()
    deadline = start + time_limit
    if inst.n == 0:
        return SolveReport(0.0, ExpandingSearch(()), 0.0, 0, {"C1": 0, "C2": 0, "tri": 0}, 0.0, "optimal")
    if incumbent is None and warm_start:
        from .localsearch import greedy_local_search

        incumbent = greedy_local_search(inst)[0]
    elif incumbent is None:
        incumbent = optimal_tree_search(inst, minimum_spanning_tree(inst))[0]
    best_seq = incumbent
    best = search_cost(inst, incumbent)
    tol = 1e-9 * max(1.0, abs(best))

    rel = Relaxation(inst, c2_static="C2" in families)
    stats = CutStats()
    counter = itertools.count()
    heap = [(-np.inf, 0, next(counter), BnCNode())]
    nodes = 0
    status = "optimal"
    open_bound = None

    while heap:
        bound, _, _, node = heapq.heappop(heap)
        if bound >= best - tol:
            continue
        if time.monotonic() > deadline:
            status = "time-limit"
            open_bound = min([bound] + [h[0] for h in heap])
            break
        nodes += 1
        sol = cutting_plane_loop(rel, node, families, stats, cutoff=best - tol, deadline=deadline)
        if not sol.optimal:
            continue
        node_bound = max(node.bound, sol.objective)
        if verbose:
            log.info("node %d depth %d bound %.6f incumbent %.6f open %d", nodes, node.depth, node_bound, best, len(heap))
        if node_bound >= best - tol:
            continue
        xv = sol.x
        tree = _tree_from_x(rel, xv, threshold=0.0)
        if tree is not None:
            seq, cost = optimal_tree_search(inst, tree)
            if cost < best - tol:
                best, best_seq = cost, seq
        xs = np.array([xv[rel.x[a]] for a in rel.arcs])
        frac = np.abs(xs - np.round(xs))
        if frac.max() <= INT_TOL:
            if rel.lazy_triangles and sol.objective < cost - tol and separate_triangles(rel, xv):
                # ordering rows still missing: the bound is not exact yet
                heapq.heappush(heap, (node_bound, -node.depth, next(counter), node))
                for c in separate_triangles(rel, xv, limit=10**6):
                    if c.key not in stats.pool:
                        stats.pool.add(c.key)
                        stats.counts["tri"] += 1
                        rel.model.add_row(c.coefs, ">=", c.rhs, "tri")
            continue  # integral x: the tree's exact optimum was evaluated above
        if time.monotonic() > deadline:
            status = "time-limit"
            open_bound = min([node_bound] + [h[0] for h in heap])
            break
        pick = int(np.argmin(np.abs(xs - 0.5) + (frac <= INT_TOL) * 10))
        arc = rel.arcs[pick]
        for child in (BnCNode(node.fixed | {arc}, node.forbidden, node_bound, node.depth + 1),
                      BnCNode(node.fixed, node.forbidden | {arc}, node_bound, node.depth + 1)):
            heapq.heappush(heap, (node_bound, -child.depth, next(counter), child))

    lower = best if status == "optimal" else min(open_bound, best)
    return SolveReport(best, best_seq, lower, nodes, dict(stats.counts), time.monotonic() - start, status)
