"""Small LP layer: an incrementally growing model, a HiGHS backend for the
cutting-plane loop and a dense bounded-variable primal simplex for
cross-checking on small models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

FEAS_TOL = 1e-7
INT_TOL = 1e-6
OBJ_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"

SENSES = ("<=", "=", ">=")


@dataclass
class Row:
    coefs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = math.inf
    basis: object = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class LpModel:
    """Minimisation model with bounded columns and sparse rows.

    Rows and columns are only ever appended; bounds may change.  A HiGHS
    instance mirroring the model is created lazily and kept in sync so that
    re-solves after ``add_rows`` or bound changes start from the previous basis.
    """

    names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)

    def __post_init__(self):
        self.index: dict[str, int] = {name: i for i, name in enumerate(self.names)}
        self._highs = None
        self._synced_cols = 0
        self._synced_rows = 0
        self._dirty_bounds: set[int] = set()

    @property
    def num_cols(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_column(self, name: str, lb: float = 0.0, ub: float = 1.0, obj: float = 0.0) -> int:
        if name in self.index:
            raise ValueError(f"duplicate column {name!r}")
        if not (math.isfinite(lb) and lb <= ub):
            raise ValueError(f"bad bounds for {name!r}: [{lb}, {ub}]")
        self.index[name] = len(self.names)
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        return len(self.names) - 1

    def add_row(self, coefs: Mapping[int, float], sense: str, rhs: float, name: str = "") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown row sense {sense!r}")
        clean = {}
        for j, a in coefs.items():
            if not (0 <= j < len(self.names)):
                raise KeyError(f"unknown column {j}")
            if not math.isfinite(a):
                raise ValueError("row coefficients must be finite")
            if a != 0:
                clean[int(j)] = clean.get(int(j), 0.0) + float(a)
        self.rows.append(Row(clean, sense, float(rhs), name))
        return len(self.rows) - 1

    def set_bounds(self, j: int, lb: float, ub: float):
        if lb > ub:
            raise ValueError("lower bound above upper bound")
        if (self.lb[j], self.ub[j]) != (lb, ub):
            self.lb[j] = float(lb)
            self.ub[j] = float(ub)
            self._dirty_bounds.add(j)

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return np.array([sum(a * x[j] for j, a in r.coefs.items()) for r in self.rows])

    def violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of ``x``."""
        x = np.asarray(x)
        worst = float(max(np.max(np.array(self.lb) - x, initial=0.0), np.max(x - np.array(self.ub), initial=0.0)))
        for r, act in zip(self.rows, self.row_activity(x)):
            if r.sense == "<=":
                worst = max(worst, act - r.rhs)
            elif r.sense == ">=":
                worst = max(worst, r.rhs - act)
            else:
                worst = max(worst, abs(act - r.rhs))
        return worst

    def objective_value(self, x) -> float:
        return float(np.dot(self.obj, x))

    def copy(self) -> "LpModel":
        return LpModel(list(self.names), list(self.lb), list(self.ub), list(self.obj),
                       [Row(dict(r.coefs), r.sense, r.rhs, r.name) for r in self.rows])

    def dense(self):
        """``(A, senses, b)`` as dense arrays."""
        A = np.zeros((len(self.rows), len(self.names)))
        for i, r in enumerate(self.rows):
            for j, a in r.coefs.items():
                A[i, j] = a
        return A, [r.sense for r in self.rows], np.array([r.rhs for r in self.rows])


def add_rows(model: LpModel, rows: Iterable[tuple[Mapping[int, float], str, float] | Row]) -> LpModel:
    for r in rows:
        if isinstance(r, Row):
            model.add_row(r.coefs, r.sense, r.rhs, r.name)
        else:
            model.add_row(*r)
    return model


def solve(model: LpModel, warm_basis=None, backend: str = "highs", max_iter: int = 100000) -> LpSolution:
    if backend == "highs":
        return _solve_highs(model, warm_basis)
    if backend == "simplex":
        return primal_simplex(model, max_iter=max_iter)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# HiGHS backend


def _row_bounds(r: Row):
    if r.sense == "<=":
        return -math.inf, r.rhs
    if r.sense == ">=":
        return r.rhs, math.inf
    return r.rhs, r.rhs


def _solve_highs(model: LpModel, warm_basis=None) -> LpSolution:
    import highspy

    h = model._highs
    if h is None:
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("random_seed", 0)
        h.setOptionValue("threads", 1)
        model._highs = h
        model._synced_cols = model._synced_rows = 0
        model._dirty_bounds = set()
    inf = highspy.kHighsInf
    if model._synced_cols < model.num_cols:
        js = range(model._synced_cols, model.num_cols)
        h.addCols(len(js), np.array([model.obj[j] for j in js]),
                  np.array([model.lb[j] for j in js]),
                  np.array([model.ub[j] if math.isfinite(model.ub[j]) else inf for j in js]),
                  0, np.array([], dtype=np.int32), np.array([], dtype=np.int32), np.array([]))
        model._synced_cols = model.num_cols
    if model._synced_rows < model.num_rows:
        new = model.rows[model._synced_rows:]
        lo, hi, starts, idx, val = [], [], [], [], []
        for r in new:
            a, b = _row_bounds(r)
            lo.append(a if math.isfinite(a) else -inf)
            hi.append(b if math.isfinite(b) else inf)
            starts.append(len(idx))
            for j, c in sorted(r.coefs.items()):
                idx.append(j)
                val.append(c)
        h.addRows(len(new), np.array(lo), np.array(hi), len(idx), np.array(starts, dtype=np.int32),
                  np.array(idx, dtype=np.int32), np.array(val, dtype=float))
        model._synced_rows = model.num_rows
    if model._dirty_bounds:
        js = sorted(model._dirty_bounds)
        h.changeColsBounds(len(js), np.array(js, dtype=np.int32),
                           np.array([model.lb[j] for j in js]),
                           np.array([model.ub[j] if math.isfinite(model.ub[j]) else inf for j in js]))
        model._dirty_bounds = set()
    if warm_basis is not None:
        h.setBasis(warm_basis)
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    iters = int(info.simplex_iteration_count)
    if status == highspy.HighsModelStatus.kOptimal:
        x = np.array(h.getSolution().col_value)
        return LpSolution(OPTIMAL, x, float(info.objective_function_value), h.getBasis(), iters)
    if status in (highspy.HighsModelStatus.kInfeasible, highspy.HighsModelStatus.kUnboundedOrInfeasible):
        return LpSolution(INFEASIBLE, iterations=iters)
    if status == highspy.HighsModelStatus.kIterationLimit:
        return LpSolution(ITERATION_LIMIT, iterations=iters)
    # anything else: retry from scratch once before giving up
    h.clearSolver()
    h.run()
    if h.getModelStatus() == highspy.HighsModelStatus.kOptimal:
        info = h.getInfo()
        return LpSolution(OPTIMAL, np.array(h.getSolution().col_value), float(info.objective_function_value), h.getBasis(), iters)
    if h.getModelStatus() == highspy.HighsModelStatus.kInfeasible:
        return LpSolution(INFEASIBLE, iterations=iters)
    raise RuntimeError(f"LP solver returned status {h.modelStatusToString(h.getModelStatus())}")


# ---------------------------------------------------------------------------
# dense bounded-variable primal simplex


def primal_simplex(model: LpModel, max_iter: int = 100000, tol: float = 1e-9) -> LpSolution:
    """Two-phase primal simplex on a dense tableau with bounded variables.

    Nonbasic variables sit at one of their bounds.  Dantzig pricing is used
    until a run of degenerate pivots, after which Bland's rule takes over.
    """
    A0, senses, b = model.dense()
    m, n = A0.shape
    lb = np.array(model.lb, dtype=float)
    ub = np.array(model.ub, dtype=float)
    c = np.array(model.obj, dtype=float)
    # slacks
    slack_cols = []
    for i, s in enumerate(senses):
        if s == "<=":
            slack_cols.append((i, 1.0))
        elif s == ">=":
            slack_cols.append((i, -1.0))
    ns = len(slack_cols)
    A = np.zeros((m, n + ns + m))
    A[:, :n] = A0
    for k, (i, sign) in enumerate(slack_cols):
        A[i, n + k] = sign
    lo = np.concatenate([lb, np.zeros(ns), np.zeros(m)])
    hi = np.concatenate([ub, np.full(ns, np.inf), np.full(m, np.inf)])
    x = np.concatenate([lb, np.zeros(ns), np.zeros(m)])
    resid = b - A[:, : n + ns] @ x[: n + ns]
    for i in range(m):
        A[i, n + ns + i] = 1.0 if resid[i] >= 0 else -1.0
    x[n + ns:] = np.abs(resid)
    basis = list(range(n + ns, n + ns + m))
    total = n + ns + m
    B_inv = np.diag([A[i, n + ns + i] for i in range(m)])

    phase1 = np.concatenate([np.zeros(n + ns), np.ones(m)])
    it = 0
    status, it = _simplex_loop(A, B_inv, basis, x, lo, hi, phase1, max_iter, tol, it)
    if status != OPTIMAL:
        return LpSolution(status, iterations=it)
    if phase1 @ x > FEAS_TOL:
        return LpSolution(INFEASIBLE, iterations=it)
    # artificials pinned to zero for phase 2
    hi[n + ns:] = 0.0
    x[n + ns:] = np.clip(x[n + ns:], 0.0, 0.0)
    B_inv = np.linalg.inv(A[:, basis])
    _recompute_basic(A, B_inv, basis, x, b)
    cost = np.concatenate([c, np.zeros(ns + m)])
    status, it = _simplex_loop(A, B_inv, basis, x, lo, hi, cost, max_iter, tol, it)
    if status != OPTIMAL:
        return LpSolution(status, iterations=it)
    xs = x[:n].copy()
    return LpSolution(OPTIMAL, xs, float(c @ xs), tuple(basis), it)


def _recompute_basic(A, B_inv, basis, x, b):
    mask = np.ones(A.shape[1], dtype=bool)
    mask[basis] = False
    x[basis] = B_inv @ (b - A[:, mask] @ x[mask])


def _simplex_loop(A, B_inv, basis, x, lo, hi, cost, max_iter, tol, it):
    m, total = A.shape
    degenerate = 0
    is_basic = np.zeros(total, dtype=bool)
    is_basic[basis] = True
    while True:
        if it >= max_iter:
            return ITERATION_LIMIT, it
        it += 1
        y = cost[basis] @ B_inv
        d = cost - y @ A
        at_lo = np.isclose(x, lo, atol=tol)
        at_hi = np.isfinite(hi) & np.isclose(x, hi, atol=tol)
        can_up = ~is_basic & (d < -tol) & ~at_hi & (hi > lo)
        can_down = ~is_basic & (d > tol) & ~at_lo & (hi > lo)
        cand = np.flatnonzero(can_up | can_down)
        if len(cand) == 0:
            return OPTIMAL, it
        if degenerate > 50:
            j = int(cand[0])
        else:
            j = int(cand[np.argmax(np.abs(d[cand]))])
        direction = 1.0 if can_up[j] else -1.0
        col = B_inv @ A[:, j]
        # basic x_B moves by -direction * t * col
        delta = -direction * col
        step = hi[j] - lo[j]
        leave = -1
        leave_to_hi = False
        for r in range(m):
            k = basis[r]
            if delta[r] < -tol:
                t = (x[k] - lo[k]) / -delta[r]
                to_hi = False
            elif delta[r] > tol and math.isfinite(hi[k]):
                t = (hi[k] - x[k]) / delta[r]
                to_hi = True
            else:
                continue
            t = max(t, 0.0)
            if t < step - 1e-12 or (leave >= 0 and abs(t - step) <= 1e-12 and k < basis[leave]):
                step, leave, leave_to_hi = t, r, to_hi
        if not math.isfinite(step):
            raise ValueError("LP is unbounded; every model here has bounded columns")
        degenerate = degenerate + 1 if step <= 1e-12 else 0
        x[j] += direction * step
        x[basis] += delta * step
        if leave < 0:
            continue  # bound flip
        k = basis[leave]
        x[k] = hi[k] if leave_to_hi else lo[k]
        piv = col[leave]
        row = B_inv[leave] / piv
        B_inv -= np.outer(col, row)
        B_inv[leave] = row
        is_basic[k] = False
        is_basic[j] = True
        basis[leave] = j


def to_lp_format(model: LpModel) -> str:
    """CPLEX LP text dump, for debugging against external solvers."""

    def expr(coefs):
        parts = []
        for j, a in sorted(coefs.items()):
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {abs(a):.12g} {model.names[j]}")
        text = " ".join(parts) if parts else "0"
        return text[2:] if text.startswith("+ ") else text

    lines = ["Minimize", " obj: " + expr({j: a for j, a in enumerate(model.obj) if a}), "Subject To"]
    for i, r in enumerate(model.rows):
        op = {"<=": "<=", ">=": ">=", "=": "="}[r.sense]
        lines.append(f" {r.name or 'r'}_{i}: {expr(r.coefs)} {op} {r.rhs:.12g}")
    lines.append("Bounds")
    for j, name in enumerate(model.names):
        hi = "+inf" if not math.isfinite(model.ub[j]) else f"{model.ub[j]:.12g}"
        lines.append(f" {model.lb[j]:.12g} <= {name} <= {hi}")
    lines.append("End")
    return "\n".join(lines) + "\n"
