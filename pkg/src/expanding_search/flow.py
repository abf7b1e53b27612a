"""Shortest-augmenting-path max-flow / min-cut on small dense networks."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

FLOW_EPS = 1e-12


@dataclass(frozen=True)
class FlowNetwork:
    """Directed network on nodes ``0..size-1``; parallel arcs add up."""

    size: int
    arcs: tuple[tuple[int, int, float], ...]
    source: int
    sink: int

    def __post_init__(self):
        for u, v, cap in self.arcs:
            if not (0 <= u < self.size and 0 <= v < self.size):
                raise ValueError(f"arc {(u, v)} has an endpoint outside the network")
            if not (cap >= 0 and np.isfinite(cap)):
                raise ValueError(f"arc {(u, v)} has invalid capacity {cap}")
        if self.source == self.sink:
            raise ValueError("source and sink coincide")

    def capacity_matrix(self) -> np.ndarray:
        cap = np.zeros((self.size, self.size))
        for u, v, c in self.arcs:
            if u != v:
                cap[u, v] += c
        return cap

    def cut_capacity(self, side) -> float:
        side = set(side)
        return float(sum(c for u, v, c in self.arcs if u in side and v not in side))


def max_flow_min_cut(net: FlowNetwork) -> tuple[float, set[int]]:
    """Edmonds-Karp.  Returns the flow value and the source side of a minimum cut."""
    cap = net.capacity_matrix()
    flow = np.zeros_like(cap)
    s, t = net.source, net.sink
    nbrs = [np.flatnonzero((cap[u] > 0) | (cap[:, u] > 0)) for u in range(net.size)]
    value = 0.0
    while True:
        prev = np.full(net.size, -1)
        prev[s] = s
        queue = deque([s])
        while queue and prev[t] < 0:
            u = queue.popleft()
            for v in nbrs[u]:
                if prev[v] < 0 and cap[u, v] - flow[u, v] > FLOW_EPS:
                    prev[v] = u
                    queue.append(v)
        if prev[t] < 0:
            break
        bottleneck = np.inf
        v = t
        while v != s:
            u = prev[v]
            bottleneck = min(bottleneck, cap[u, v] - flow[u, v])
            v = u
        v = t
        while v != s:
            u = prev[v]
            flow[u, v] += bottleneck
            flow[v, u] -= bottleneck
            v = u
        value += bottleneck
    side = {int(v) for v in np.flatnonzero(prev >= 0)}
    return float(value), side
