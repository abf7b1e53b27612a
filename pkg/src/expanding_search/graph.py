"""Rooted edge-weighted graphs, expanding searches and shared graph utilities.

Vertices are dense integer ids ``0..N-1`` with the root always at id 0.  The
original (external) vertex labels are kept in ``Instance.names``.
"""
from __future__ import annotations

import heapq
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

PROB_TOL = 1e-9
COST_TOL = 1e-9

Edge = tuple[int, int]


class InstanceError(ValueError):
    """Structural problem with an instance."""


class DisconnectedGraphError(InstanceError):
    pass


class ProbabilityError(InstanceError):
    pass


class InvalidSearchError(ValueError):
    """An edge sequence that is not an expanding search.

    ``step`` is the 0-based index of the offending edge (or ``None`` when the
    sequence as a whole is wrong, e.g. too short).
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


def ekey(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Instance:
    """A connected rooted graph with vertex probabilities and edge lengths.

    Use :meth:`from_edges` to build one; the constructor expects the root at 0
    and edges keyed by ``(min, max)``.
    """

    prob: np.ndarray
    lengths: dict[Edge, float]
    names: tuple[str, ...] = ()
    weights: tuple[int, ...] | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=float)
        prob.setflags(write=False)
        object.__setattr__(self, "prob", prob)
        N = len(prob)
        if N < 1:
            raise InstanceError("instance needs at least the root vertex")
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i) for i in range(N)))
        if len(self.names) != N:
            raise InstanceError("name table size does not match vertex count")
        if np.any(prob < -PROB_TOL) or np.any(prob > 1 + PROB_TOL):
            raise ProbabilityError("probabilities must lie in [0, 1]")
        if abs(prob[0]) > PROB_TOL:
            raise ProbabilityError(f"root probability must be 0, got {prob[0]}")
        adj: list[list[int]] = [[] for _ in range(N)]
        for (u, v), length in self.lengths.items():
            if not (0 <= u < v < N):
                raise InstanceError(f"bad edge key {(u, v)}")
            if not (length > 0 and math.isfinite(length)):
                raise InstanceError(f"edge {(u, v)} has non-positive length {length}")
            adj[u].append(v)
            adj[v].append(u)
        for a in adj:
            a.sort()
        object.__setattr__(self, "adj", tuple(tuple(a) for a in adj))
        seen = _reachable(self.adj, 0)
        if len(seen) != N:
            raise DisconnectedGraphError(
                f"graph is disconnected: {N - len(seen)} vertices unreachable from the root"
            )

    @classmethod
    def from_edges(
        cls,
        prob: Mapping | Sequence[float],
        edges: Iterable[tuple],
        root=0,
        names: Sequence | None = None,
        weights=None,
        meta=None,
        check_mass: bool = True,
    ) -> "Instance":
        """Build an instance from arbitrary vertex labels.

        ``prob`` is a mapping label -> probability (or a sequence indexed by
        label 0..N-1).  Parallel edges collapse to their minimum length.
        """
        if isinstance(prob, Mapping):
            labels = list(prob)
        else:
            labels = list(range(len(prob))) if names is None else list(names)
            prob = dict(zip(labels, prob))
        if root not in prob:
            raise InstanceError(f"root {root!r} is not a vertex")
        order = [root] + [v for v in labels if v != root]
        idx = {v: i for i, v in enumerate(order)}
        p = np.array([float(prob[v]) for v in order])
        lengths: dict[Edge, float] = {}
        for u, v, length in edges:
            if u == v:
                raise InstanceError(f"self-loop at {u!r}")
            if u not in idx or v not in idx:
                raise InstanceError(f"edge {(u, v)!r} uses an unknown vertex")
            k = ekey(idx[u], idx[v])
            length = float(length)
            if k in lengths:
                warnings.warn(f"parallel edge {(u, v)!r} collapsed to minimum length", stacklevel=2)
                length = min(length, lengths[k])
            lengths[k] = length
        w = None
        if weights is not None:
            w = tuple(int(weights[v]) if isinstance(weights, Mapping) else int(weights[labels.index(v)]) for v in order)
        inst = cls(p, lengths, tuple(str(v) for v in order), w, dict(meta or {}))
        if check_mass:
            inst.check_distribution()
        return inst

    # -- basic queries -----------------------------------------------------
    @property
    def N(self) -> int:
        """Total vertex count including the root."""
        return len(self.prob)

    @property
    def n(self) -> int:
        """Number of non-root vertices."""
        return len(self.prob) - 1

    @property
    def root(self) -> int:
        return 0

    @property
    def edges(self) -> list[Edge]:
        return sorted(self.lengths)

    def length(self, u: int, v: int) -> float:
        return self.lengths[ekey(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return ekey(u, v) in self.lengths

    def mass(self, vertices: Iterable[int]) -> float:
        return float(sum(self.prob[v] for v in vertices))

    def check_distribution(self):
        total = float(self.prob.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise ProbabilityError(f"probabilities sum to {total!r}, expected 1")

    def length_matrix(self) -> np.ndarray:
        """Dense matrix of edge lengths, ``inf`` for non-adjacent pairs."""
        L = np.full((self.N, self.N), np.inf)
        for (u, v), length in self.lengths.items():
            L[u, v] = L[v, u] = length
        return L

    def is_tree(self) -> bool:
        return len(self.lengths) == self.N - 1

    def with_prob(self, prob) -> "Instance":
        return Instance(np.asarray(prob, dtype=float), dict(self.lengths), self.names, None, dict(self.meta))

    def with_lengths(self, lengths: Mapping[Edge, float]) -> "Instance":
        return Instance(self.prob, dict(lengths), self.names, self.weights, dict(self.meta))

    def __repr__(self):
        return f"Instance(N={self.N}, edges={len(self.lengths)})"


def _reachable(adj, start) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


# ---------------------------------------------------------------------------
# expanding searches


@dataclass(frozen=True)
class ExpandingSearch:
    """An ordered edge sequence; each edge is stored as ``(visited, new)``."""

    steps: tuple[Edge, ...]

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    @property
    def order(self) -> list[int]:
        """Visited vertices in order, root excluded."""
        return [v for _, v in self.steps]

    def arrival(self, inst: Instance) -> dict[int, float]:
        validate_search(inst, self)
        t = 0.0
        arr = {0: 0.0}
        for u, v in self.steps:
            t += inst.length(u, v)
            arr[v] = t
        return arr


def as_search(inst: Instance, edges: Iterable[Sequence[int]]) -> ExpandingSearch:
    """Orient a plain edge list into an :class:`ExpandingSearch`.

    Each edge may be given in either orientation; it must connect exactly one
    already visited vertex to a new one.
    """
    visited = {0}
    steps = []
    for k, (a, b) in enumerate(edges):
        if a in visited and b not in visited:
            steps.append((a, b))
            visited.add(b)
        elif b in visited and a not in visited:
            steps.append((b, a))
            visited.add(a)
        elif a in visited:
            raise InvalidSearchError(f"edge {(a, b)} revisits two searched vertices", k)
        else:
            raise InvalidSearchError(f"edge {(a, b)} is not attached to the searched region", k)
    seq = ExpandingSearch(tuple(steps))
    validate_search(inst, seq)
    return seq


def validate_search(inst: Instance, seq: ExpandingSearch, complete: bool = True):
    visited = {0}
    for k, (u, v) in enumerate(seq.steps):
        if not inst.has_edge(u, v):
            raise InvalidSearchError(f"{(u, v)} is not an edge of the graph", k)
        if u not in visited:
            raise InvalidSearchError(f"edge {(u, v)} starts outside the searched region", k)
        if v in visited:
            raise InvalidSearchError(f"vertex {v} is visited twice", k)
        visited.add(v)
    if complete and len(visited) != inst.N:
        raise InvalidSearchError(f"search covers {len(visited)} of {inst.N} vertices")


def search_cost(inst: Instance, seq: ExpandingSearch) -> float:
    """Expected distance travelled before the target is found."""
    validate_search(inst, seq)
    t = 0.0
    cost = 0.0
    for u, v in seq.steps:
        t += inst.length(u, v)
        cost += inst.prob[v] * t
    return float(cost)


def search_cost_by_steps(inst: Instance, seq: ExpandingSearch) -> float:
    """Same value as :func:`search_cost`, summed per step as length times unfound mass."""
    validate_search(inst, seq)
    remaining = 1.0 if inst.N == 0 else float(inst.prob.sum())
    cost = 0.0
    for u, v in seq.steps:
        cost += inst.length(u, v) * remaining
        remaining -= inst.prob[v]
    return float(cost)


# ---------------------------------------------------------------------------
# rooted trees


@dataclass(frozen=True, eq=False)
class RootedTree:
    """A subtree containing the root, stored by parent pointers.

    ``parent[v]`` and ``plen[v]`` give the parent of a non-root tree vertex and
    the length of the connecting edge.  ``mass`` is the probability of the tree's
    vertices in the instance the tree was built for.
    """

    parent: dict[int, int]
    plen: dict[int, float]
    mass: float = 0.0
    root: int = 0

    @property
    def vertices(self) -> set[int]:
        return {self.root, *self.parent}

    @property
    def length(self) -> float:
        return float(sum(self.plen.values()))

    @property
    def edges(self) -> set[Edge]:
        return {ekey(v, u) for v, u in self.parent.items()}

    @property
    def density(self) -> float:
        total = self.length
        if total <= 0:
            raise ValueError("density undefined for a tree without edges")
        return self.mass / total

    def __len__(self):
        return len(self.parent) + 1

    def children(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = {v: [] for v in self.vertices}
        for v in sorted(self.parent):
            ch[self.parent[v]].append(v)
        return ch

    def depth(self) -> dict[int, int]:
        depth = {self.root: 0}
        ch = self.children()
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            for v in ch[u]:
                depth[v] = depth[u] + 1
                queue.append(v)
        return depth

    @classmethod
    def from_edges(cls, inst: Instance, edges: Iterable[Sequence[int]], lengths: Mapping[Edge, float] | None = None, root: int = 0):
        """Orient an undirected edge set away from ``root``.

        Raises :class:`InstanceError` when the edges do not form a tree
        containing the root.
        """
        lengths = inst.lengths if lengths is None else lengths
        adj: dict[int, list[int]] = {root: []}
        count = 0
        for a, b in edges:
            k = ekey(a, b)
            if k not in lengths:
                raise InstanceError(f"{(a, b)} is not an edge")
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
            count += 1
        parent: dict[int, int] = {}
        plen: dict[int, float] = {}
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if v in seen:
                    continue
                seen.add(v)
                parent[v] = u
                plen[v] = lengths[ekey(u, v)]
                queue.append(v)
        if len(seen) != len(adj) or count != len(adj) - 1:
            raise InstanceError("edge set is not a tree containing the root")
        return cls(parent, plen, inst.mass(seen), root)

    @classmethod
    def root_only(cls, root: int = 0):
        return cls({}, {}, 0.0, root)

    def spans(self, inst: Instance) -> bool:
        return len(self.parent) == inst.N - 1


def tree_path(tree: RootedTree, a: int, b: int) -> list[Edge]:
    """Edges of the tree path between ``a`` and ``b``."""
    up_a, up_b = [a], [b]
    depth = tree.depth()
    x, y = a, b
    while depth[x] > depth[y]:
        x = tree.parent[x]
        up_a.append(x)
    while depth[y] > depth[x]:
        y = tree.parent[y]
        up_b.append(y)
    while x != y:
        x = tree.parent[x]
        y = tree.parent[y]
        up_a.append(x)
        up_b.append(y)
    path = up_a + up_b[-2::-1]
    return [ekey(path[i], path[i + 1]) for i in range(len(path) - 1)]


def fundamental_cycle(tree: RootedTree, e: Sequence[int]) -> list[Edge]:
    """Tree path between the endpoints of the non-tree edge ``e``, plus ``e``."""
    a, b = e
    verts = tree.vertices
    if a not in verts or b not in verts:
        raise ValueError(f"edge {tuple(e)} has an endpoint outside the tree")
    if tree.parent.get(a) == b or tree.parent.get(b) == a or a == b:
        raise ValueError(f"edge {tuple(e)} already belongs to the tree")
    return tree_path(tree, a, b) + [ekey(a, b)]


def minimum_spanning_tree(inst: Instance, vertices: Iterable[int] | None = None, lengths: Mapping[Edge, float] | None = None) -> RootedTree | None:
    """Prim's algorithm on the subgraph induced by ``vertices`` (default: all).

    Returns ``None`` when the induced subgraph is disconnected.
    """
    lengths = inst.lengths if lengths is None else lengths
    vs = set(range(inst.N)) if vertices is None else set(vertices)
    root = 0 if 0 in vs else min(vs)
    parent: dict[int, int] = {}
    plen: dict[int, float] = {}
    done = set()
    heap = [(0.0, -1, root)]
    while heap:
        d, u, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if u >= 0:
            parent[v] = u
            plen[v] = d
        for w in inst.adj[v]:
            if w in vs and w not in done:
                heapq.heappush(heap, (lengths[ekey(v, w)], v, w))
    if len(done) != len(vs):
        return None
    return RootedTree(parent, plen, inst.mass(done), root)


# ---------------------------------------------------------------------------
# metric closure and contraction


@dataclass(frozen=True, eq=False)
class MetricClosure:
    """Complete graph of shortest-path lengths together with witness paths."""

    graph: Instance
    instance: Instance
    paths: dict[Edge, tuple[int, ...]]

    def path(self, u: int, v: int) -> list[int]:
        p = self.paths[ekey(u, v)]
        return list(p) if p[0] == u else list(reversed(p))

    def is_original(self, u: int, v: int) -> bool:
        return len(self.paths[ekey(u, v)]) == 2


def shortest_paths(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs distances and predecessor matrix (Dijkstra from every vertex)."""
    N = inst.N
    dist = np.full((N, N), np.inf)
    pred = np.full((N, N), -1, dtype=int)
    for s in range(N):
        d = dist[s]
        d[s] = 0.0
        heap = [(0.0, s)]
        done = np.zeros(N, dtype=bool)
        while heap:
            du, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v in inst.adj[u]:
                nd = du + inst.lengths[ekey(u, v)]
                # strict improvement keeps the first (fewest-hop, smallest-id) witness
                if nd < d[v]:
                    d[v] = nd
                    pred[s, v] = u
                    heapq.heappush(heap, (nd, v))
    return dist, pred


def metric_closure(inst: Instance) -> MetricClosure:
    dist, pred = shortest_paths(inst)
    N = inst.N
    lengths: dict[Edge, float] = {}
    paths: dict[Edge, tuple[int, ...]] = {}
    for u in range(N):
        for v in range(u + 1, N):
            if inst.has_edge(u, v) and inst.length(u, v) <= dist[u, v]:
                path = [u, v]
            else:
                path = [v]
                while path[-1] != u:
                    path.append(int(pred[u, path[-1]]))
                path.reverse()
            lengths[(u, v)] = float(dist[u, v])
            paths[(u, v)] = tuple(path)
    closure = Instance(inst.prob, lengths, inst.names, inst.weights, dict(inst.meta))
    return MetricClosure(inst, closure, paths)


@dataclass(frozen=True, eq=False)
class Contraction:
    """``G/S``: the instance, the map to original ids, and root-edge witnesses.

    ``orig[i]`` is the original id of contracted vertex ``i``; ``witness[w]`` is
    the original edge ``(s, orig[w])`` realising the root edge ``{0, w}``.
    """

    instance: Instance
    orig: tuple[int, ...]
    witness: dict[int, Edge]

    def lift_edge(self, u: int, v: int) -> Edge:
        """Original oriented edge for the contracted edge ``(u, v)``."""
        if u == 0:
            return self.witness[v]
        if v == 0:
            s, w = self.witness[u]
            return (w, s)
        return (self.orig[u], self.orig[v])


def contract(inst: Instance, S: Iterable[int]) -> Contraction:
    S = set(S)
    if 0 not in S:
        raise ValueError("contracted set must contain the root")
    rest = [v for v in range(inst.N) if v not in S]
    if not rest:
        raise ValueError("nothing to contract: S covers every vertex")
    orig = (0, *rest)
    new = {v: i for i, v in enumerate(orig)}
    lengths: dict[Edge, float] = {}
    best: dict[int, tuple[float, int]] = {}
    for (u, v), length in inst.lengths.items():
        if u in S and v in S:
            continue
        if u not in S and v not in S:
            lengths[ekey(new[u], new[v])] = length
            continue
        s, w = (u, v) if u in S else (v, u)
        cand = (length, s)
        if w not in best or cand < best[w]:
            best[w] = cand
    witness: dict[int, Edge] = {}
    for w, (length, s) in best.items():
        lengths[(0, new[w])] = length
        witness[new[w]] = (s, w)
    prob = np.array([0.0] + [inst.prob[v] for v in rest])
    names = tuple(inst.names[v] for v in orig)
    return Contraction(Instance(prob, lengths, names), orig, witness)
