"""Instance files and random instance generators.

File format (UTF-8, one record per line, ``#`` starts a comment)::

    expanding-search 1
    name <text>
    vertices <N>
    root <label>
    total_weight <W>               # only with integer weights
    vertex <label> weight <a>      # p = a / W
    vertex <label> prob <p>        # alternative: explicit probability
    edge <u> <v> <length>
    meta <key> <value ...>

The root is listed first in canonical output and carries weight/prob 0.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Instance, InstanceError, ProbabilityError, metric_closure

FORMAT_TAG = "expanding-search"
FORMAT_VERSION = 1
FAMILIES = ("random-metric", "euclidean", "density-controlled")


class InstanceFormatError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def dumps(inst: Instance) -> str:
    out = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    name = inst.meta.get("name")
    if name:
        out.append(f"name {name}")
    out.append(f"vertices {inst.N}")
    out.append(f"root {inst.names[0]}")
    if inst.weights is not None:
        out.append(f"total_weight {sum(inst.weights)}")
        for lab, a in zip(inst.names, inst.weights):
            out.append(f"vertex {lab} weight {a}")
    else:
        for lab, p in zip(inst.names, inst.prob):
            out.append(f"vertex {lab} prob {_num(p)}")
    for (u, v) in sorted(inst.lengths):
        out.append(f"edge {inst.names[u]} {inst.names[v]} {_num(inst.lengths[(u, v)])}")
    for k in sorted(inst.meta):
        if k != "name":
            out.append(f"meta {k} {inst.meta[k]}")
    return "\n".join(out) + "\n"


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst), encoding="utf-8")


def loads(text: str) -> Instance:
    header_seen = False
    n_total = None
    root = None
    total_weight = None
    probs: dict[str, float] = {}
    weights: dict[str, int] = {}
    order: list[str] = []
    edges: list[tuple[str, str, float]] = []
    meta: dict[str, str] = {}
    first_line: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        if not header_seen:
            if key != FORMAT_TAG or len(tok) != 2:
                raise InstanceFormatError(f"expected header '{FORMAT_TAG} {FORMAT_VERSION}'", lineno)
            if tok[1] != str(FORMAT_VERSION):
                raise InstanceFormatError(f"unsupported format version {tok[1]}", lineno)
            header_seen = True
            continue
        try:
            if key == "name":
                meta["name"] = line[len("name"):].strip()
            elif key == "vertices":
                (n_total,) = map(int, tok[1:])
            elif key == "root":
                (root,) = tok[1:]
            elif key == "total_weight":
                (total_weight,) = map(int, tok[1:])
            elif key == "vertex":
                lab, kind, val = tok[1:]
                if lab in first_line:
                    raise InstanceFormatError(f"vertex {lab} declared twice (first on line {first_line[lab]})", lineno)
                first_line[lab] = lineno
                order.append(lab)
                if kind == "weight":
                    weights[lab] = int(val)
                    if weights[lab] < 0:
                        raise InstanceFormatError("negative weight", lineno)
                elif kind == "prob":
                    probs[lab] = float(val)
                else:
                    raise InstanceFormatError(f"unknown vertex field {kind!r}", lineno)
            elif key == "edge":
                u, v, length = tok[1:]
                length = float(length)
                if not (length > 0 and math.isfinite(length)):
                    raise InstanceFormatError(f"edge length must be positive, got {tok[3]}", lineno)
                for x in (u, v):
                    if x not in first_line:
                        raise InstanceFormatError(f"edge uses undeclared vertex {x}", lineno)
                edges.append((u, v, length))
            elif key == "meta":
                if len(tok) < 3:
                    raise InstanceFormatError("meta needs a key and a value", lineno)
                meta[tok[1]] = line.split(None, 2)[2]
            else:
                raise InstanceFormatError(f"unknown record {key!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceFormatError(f"malformed {key} record: {raw.strip()!r}", lineno) from None

    if not header_seen:
        raise InstanceFormatError("empty file")
    if weights and probs:
        raise InstanceFormatError("mixing weight and prob vertex records")
    if root is None:
        raise InstanceFormatError("missing root record")
    if root not in first_line:
        raise InstanceFormatError(f"root {root} is not a declared vertex")
    if n_total is not None and n_total != len(order):
        raise InstanceFormatError(f"vertices says {n_total} but {len(order)} were declared")

    w = None
    if weights:
        total = sum(weights.values())
        if total_weight is not None and total_weight != total:
            raise ProbabilityError(f"total_weight {total_weight} does not match the weight sum {total}")
        if total <= 0:
            raise ProbabilityError("all weights are zero")
        if weights[root] != 0:
            raise ProbabilityError("root weight must be 0")
        prob = {lab: weights[lab] / total for lab in order}
        w = weights
    else:
        prob = {lab: probs[lab] for lab in order}
        s = math.fsum(prob.values())
        if abs(s - 1.0) > 1e-9:
            raise ProbabilityError(f"probabilities sum to {s:.12g}, expected 1")
    # reorder so that the mapping iteration matches the declaration order
    prob = {root: prob[root], **{lab: prob[lab] for lab in order if lab != root}}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        inst = Instance.from_edges(prob, edges, root=root, weights=w, meta=meta)
    for c in caught:
        warnings.warn(str(c.message), stacklevel=2)
    return inst


def read_instance(path) -> Instance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InstanceFormatError(f"{path}: not UTF-8 text ({exc.reason})") from None
    return loads(text)


# -- solutions ---------------------------------------------------------------


def dumps_solution(inst: Instance, seq, cost: float, method: str = "") -> str:
    out = [f"{FORMAT_TAG}-solution {FORMAT_VERSION}"]
    if method:
        out.append(f"method {method}")
    out.append(f"cost {cost!r}")
    for u, v in seq.steps:
        out.append(f"step {inst.names[u]} {inst.names[v]}")
    return "\n".join(out) + "\n"


# -- generators --------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n: int  # number of vertices including the root
    density: float = 1.0
    weighted: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 2:
            raise ValueError("need at least two vertices")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")

    @property
    def name(self) -> str:
        w = "w" if self.weighted else "u"
        return f"{self.family}-n{self.n}-d{round(100 * self.density)}-{w}-s{self.seed}"


def _weights(rng: np.random.Generator, N: int, weighted: bool) -> list[int]:
    if not weighted:
        return [0] + [1] * (N - 1)
    while True:
        a = rng.integers(0, 1001, size=N - 1)
        if a.sum() > 0:
            return [0] + [int(x) for x in a]


def _build(spec: GeneratorSpec, weights: list[int], edges, extra_meta) -> Instance:
    meta = {
        "name": spec.name,
        "family": spec.family,
        "seed": str(spec.seed),
        "density": repr(spec.density),
        "weighted": str(spec.weighted).lower(),
        **extra_meta,
    }
    total = sum(weights)
    return Instance.from_edges([a / total for a in weights], edges, weights=weights, meta=meta)


def edge_count_for(N: int, density: float) -> int:
    return int(round(density * N * (N - 1) / 2))


def generate_density_controlled(spec: GeneratorSpec) -> Instance:
    N = spec.n
    m = edge_count_for(N, spec.density)
    if m < N - 1:
        raise ValueError(f"density {spec.density} gives {m} edges, below the {N - 1} a spanning tree needs")
    rng = np.random.default_rng(spec.seed)
    weights = _weights(rng, N, spec.weighted)
    pts = rng.integers(0, 101, size=(N, 3))
    pairs = list(itertools.combinations(range(N), 2))
    stream = rng.permutation(len(pairs))
    comp = list(range(N))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    chosen = []
    rest = []
    for k in stream:
        u, v = pairs[k]
        a, b = find(u), find(v)
        if a != b:
            comp[a] = b
            chosen.append((u, v))
        else:
            rest.append((u, v))
    chosen += rest[: m - len(chosen)]  # rest is already in random order
    edges = [(u, v, max(1, int(np.abs(pts[u] - pts[v]).sum()))) for u, v in sorted(chosen)]
    coords = ";".join(",".join(map(str, p)) for p in pts)
    return _build(spec, weights, edges, {"coords": coords, "lengths": "manhattan-cube-100"})


def generate_random_metric(spec: GeneratorSpec, max_length: int = 100) -> Instance:
    N = spec.n
    rng = np.random.default_rng(spec.seed)
    weights = _weights(rng, N, spec.weighted)
    pairs = list(itertools.combinations(range(N), 2))
    lens = rng.integers(1, max_length + 1, size=len(pairs))
    raw = _build(spec, weights, [(u, v, int(c)) for (u, v), c in zip(pairs, lens)], {})
    closed = metric_closure(raw).instance
    edges = [(u, v, int(round(c))) for (u, v), c in sorted(closed.lengths.items())]
    return _build(spec, weights, edges, {"lengths": f"uniform-1-{max_length}-closed"})


def rounded_distances(pts) -> list[tuple[int, int, int]]:
    """Euclidean distances of all point pairs rounded to the nearest integer (at least 1)."""
    pts = np.asarray(pts)
    out = []
    for u, v in itertools.combinations(range(len(pts)), 2):
        d = int(round(float(np.hypot(*(pts[u] - pts[v])))))
        out.append((u, v, max(1, d)))
    return out


def generate_euclidean(spec: GeneratorSpec, box: int = 100) -> Instance:
    N = spec.n
    rng = np.random.default_rng(spec.seed)
    weights = _weights(rng, N, spec.weighted)
    pts = rng.integers(0, box + 1, size=(N, 2))
    coords = ";".join(",".join(map(str, p)) for p in pts)
    return _build(spec, weights, rounded_distances(pts), {"coords": coords, "lengths": f"euclidean-square-{box}"})


def generate(spec: GeneratorSpec) -> Instance:
    return {
        "random-metric": generate_random_metric,
        "euclidean": generate_euclidean,
        "density-controlled": generate_density_controlled,
    }[spec.family](spec)
