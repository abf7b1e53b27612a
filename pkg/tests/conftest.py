import random

import numpy as np
import pytest

from expanding_search.graph import Instance, ekey


def random_instance(rng, n, dens=0.5, maxlen=10, zero_prob=True):
    """Connected instance with n non-root vertices and integer lengths."""
    N = n + 1
    edges = {}
    perm = list(range(N))
    rng.shuffle(perm)
    for i in range(1, N):
        u, v = perm[i], perm[rng.randrange(i)]
        edges[ekey(u, v)] = rng.randint(1, maxlen)
    for u in range(N):
        for v in range(u + 1, N):
            if (u, v) not in edges and rng.random() < dens:
                edges[(u, v)] = rng.randint(1, maxlen)
    lo = 0 if zero_prob else 1
    w = [0] + [rng.randint(lo, 10) for _ in range(n)]
    if sum(w) == 0:
        w[1] = 1
    p = np.array(w) / sum(w)
    return Instance.from_edges(list(p), [(u, v, c) for (u, v), c in edges.items()])


def random_tree_instance(rng, n, maxlen=10):
    N = n + 1
    edges = [(rng.randrange(v), v, rng.randint(1, maxlen)) for v in range(1, N)]
    w = [0] + [rng.randint(0, 10) for _ in range(n)]
    if sum(w) == 0:
        w[-1] = 1
    return Instance.from_edges([x / sum(w) for x in w], edges)


def star_instance():
    # root r=0, leaf a=1 (p .8, len 2), leaf b=2 (p .2, len 1)
    return Instance.from_edges([0, 0.8, 0.2], [(0, 1, 2), (0, 2, 1)])


def path_instance():
    return Instance.from_edges([0, 0.5, 0.5], [(0, 1, 1), (1, 2, 1)])


def hub_instance(k=4, m=3):
    """Root joined to 1..k (length m) and to a hub h=k+1 (length m); hub
    joined to each i by length 1; p_i = 1/k, p_h = 0."""
    h = k + 1
    edges = [(0, i, m) for i in range(1, k + 1)] + [(i, h, 1) for i in range(1, k + 1)] + [(0, h, m)]
    return Instance.from_edges([0] + [1 / k] * k + [0], edges)


def labelled_cycle(n):
    """Cycle r,1,...,n with {r,1}=n, {j,j+1}=j, {n,r}=n and uniform p."""
    edges = [(0, 1, n)] + [(j, j + 1, j) for j in range(1, n)] + [(n, 0, n)]
    return Instance.from_edges([0] + [1 / n] * n, edges)


def random_cycle(rng, n, maxlen=10):
    edges = [(i, (i + 1) % (n + 1), rng.randint(1, maxlen)) for i in range(n + 1)]
    w = [0] + [rng.randint(1, 10) for _ in range(n)]
    return Instance.from_edges([x / sum(w) for x in w], edges)


@pytest.fixture
def rng():
    return random.Random(12345)
