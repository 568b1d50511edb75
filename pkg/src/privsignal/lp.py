"""Linear programming: a dense two-phase primal simplex with Bland's rule.

Instances are ``min c.x`` subject to rows ``A x (<=, ==, >=) b`` and variable
bounds ``lower <= x <= upper``.  Bounds are handled natively (nonbasic
variables sit at either bound), so they never become tableau rows.

Sample-path signal models have thousands of rows but only a handful of
columns that appear in more than one row: each scenario queue variable is a
*column singleton*.  For such instances ``solve`` forms the dual, in which
every singleton turns into a simple bound on one dual variable, runs the same
simplex on that (few-row) dual and maps the solution back.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger

from .errors import MalformedInstance

FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-10
_COST_TOL = 1e-10
_PHASE1_TOL = 1e-8


class Sense(str, enum.Enum):
    LE = "<="
    EQ = "=="
    GE = ">="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LinearProgram:
    """A minimization LP with a sparse constraint matrix."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: list
    b: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    names: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        self.A = sp.csr_matrix(self.A if self.A is not None else np.zeros((0, n)),
                               dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.senses = [Sense(s) for s in self.senses]
        self.lower = (np.zeros(n) if self.lower is None
                      else np.asarray(self.lower, dtype=np.float64).ravel())
        self.upper = (np.full(n, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=np.float64).ravel())
        self.validate()

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def validate(self) -> None:
        n, m = self.n_vars, self.n_rows
        if self.A.shape != (m, n):
            raise MalformedInstance(f"A has shape {self.A.shape}, expected {(m, n)}")
        if len(self.senses) != m:
            raise MalformedInstance(f"{len(self.senses)} senses for {m} rows")
        if self.lower.size != n or self.upper.size != n:
            raise MalformedInstance("bounds do not match the number of variables")
        if np.any(self.lower > self.upper):
            raise MalformedInstance("some lower bound exceeds its upper bound")
        if np.any(np.isnan(self.c)) or np.any(np.isnan(self.b)) or np.any(np.isinf(self.b)):
            raise MalformedInstance("objective or right-hand side is not finite")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise MalformedInstance("a bound makes the variable domain empty")

    def row_activity(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=np.float64)

    def max_violation(self, x) -> float:
        """Largest violation over all rows and bounds (0 for a feasible point)."""
        x = np.asarray(x, dtype=np.float64)
        ax = self.row_activity(x)
        viol = [0.0]
        for s, code in ((Sense.LE, 1), (Sense.GE, -1)):
            mask = np.array([t is s for t in self.senses], dtype=bool)
            if mask.any():
                viol.append(float(np.max(code * (ax[mask] - self.b[mask]))))
        eq = np.array([t is Sense.EQ for t in self.senses], dtype=bool)
        if eq.any():
            viol.append(float(np.max(np.abs(ax[eq] - self.b[eq]))))
        viol.append(float(np.max(self.lower - x, initial=0.0)))
        viol.append(float(np.max(x - self.upper, initial=0.0)))
        return max(viol)

    def dump(self, fh) -> None:
        """Write the instance as plain text.

        Line 1 ``vars n``; then one ``obj`` line of ``index:coef`` pairs; one
        ``bound index lower upper`` line per variable; one line per row:
        ``sense rhs index:coef ...``.
        """
        fh.write(f"vars {self.n_vars}\n")
        fh.write("obj " + " ".join(f"{j}:{v:.17g}" for j, v in enumerate(self.c) if v) + "\n")
        for j in range(self.n_vars):
            fh.write(f"bound {j} {self.lower[j]:.17g} {self.upper[j]:.17g}\n")
        A = self.A.tocsr()
        for i in range(self.n_rows):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            pairs = " ".join(f"{j}:{v:.17g}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
            fh.write(f"{self.senses[i].value} {self.b[i]:.17g} {pairs}\n")

    @classmethod
    def load(cls, fh) -> "LinearProgram":
        """Read an instance written by :meth:`dump`."""
        n = int(fh.readline().split()[1])
        c = np.zeros(n)
        for tok in fh.readline().split()[1:]:
            j, v = tok.split(":")
            c[int(j)] = float(v)
        lower, upper = np.zeros(n), np.zeros(n)
        for _ in range(n):
            _, j, lo, hi = fh.readline().split()
            lower[int(j)], upper[int(j)] = float(lo), float(hi)
        rows, cols, vals, senses, b = [], [], [], [], []
        for i, line in enumerate(fh):
            parts = line.split()
            if not parts:
                continue
            senses.append(parts[0])
            b.append(float(parts[1]))
            for tok in parts[2:]:
                j, v = tok.split(":")
                rows.append(len(b) - 1)
                cols.append(int(j))
                vals.append(float(v))
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(b), n))
        return cls(c, A, senses, np.array(b), lower, upper)


class LpBuilder:
    """Incremental construction of a :class:`LinearProgram` by variable name."""

    def __init__(self):
        self.names: list[str] = []
        self._index: dict[str, int] = {}
        self._cost: list[float] = []
        self._lo: list[float] = []
        self._hi: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []

    def var(self, name: str, lower: float = 0.0, upper: float = np.inf, cost: float = 0.0) -> int:
        if name in self._index:
            raise MalformedInstance(f"duplicate variable {name!r}")
        self._index[name] = len(self.names)
        self.names.append(name)
        self._cost.append(cost)
        self._lo.append(lower)
        self._hi.append(upper)
        return self._index[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def add_cost(self, name: str, coef: float) -> None:
        self._cost[self._index[name]] += coef

    def row(self, coeffs: dict, sense: str, rhs: float) -> int:
        i = len(self._rhs)
        for name, v in coeffs.items():
            if v != 0:
                self._rows.append(i)
                self._cols.append(self._index[name])
                self._vals.append(float(v))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        return i

    def build(self) -> LinearProgram:
        n = len(self.names)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(len(self._rhs), n))
        return LinearProgram(np.array(self._cost), A, list(self._senses), np.array(self._rhs),
                             np.array(self._lo), np.array(self._hi), list(self.names))


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    iterations: int = 0
    method: str = "primal"
    flagged: bool = False
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# Core: bounded-variable simplex on  min c.x, A x = b (b >= 0), 0 <= x <= u.
# ---------------------------------------------------------------------------

class _Tableau:
    def __init__(self, A, b, u, basis):
        # Row-major storage keeps pivot rows contiguous; the rank-1 update runs
        # in place through BLAS on the (column-major) transpose.
        self.T = np.array(A, dtype=np.float64, order="C")
        self.m, self.n = A.shape
        self.u = u.copy()
        self.basis = np.array(basis, dtype=np.intp)
        self.is_basic = np.zeros(self.n, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(self.n, dtype=bool)
        self.xB = b.astype(np.float64).copy()
        self.iterations = 0

    def reduced_costs(self, c):
        return c - c[self.basis] @ self.T

    def pivot(self, r, j, d):
        row = self.T[r] / self.T[r, j]
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T = dger(-1.0, row, col, a=self.T.T, overwrite_a=1).T
        self.T[r] = row
        d -= d[j] * row
        d[j] = 0.0
        self.is_basic[self.basis[r]] = False
        self.basis[r] = j
        self.is_basic[j] = True

    def run(self, c, allowed, max_iter):
        """Minimize ``c`` from the current basic feasible solution.

        Returns ``"optimal"``, ``"unbounded"`` or ``"limit"``.
        """
        d = self.reduced_costs(c)
        free = allowed & ~self.is_basic
        cand, nxt = None, 0
        while True:
            if self.iterations >= max_iter:
                return "limit"
            if cand is None:
                # improving: d < 0 at the lower bound, d > 0 at the upper one
                elig = free & (np.where(self.at_upper, d, -d) > _COST_TOL)
                cand, nxt = np.flatnonzero(elig), 0
            if nxt >= cand.size:
                return "optimal"
            j = cand[nxt]  # Bland: lowest-index improving column
            self.iterations += 1
            step_up = not self.at_upper[j]
            alpha = self.T[:, j] if step_up else -self.T[:, j]

            theta = np.inf
            r = -1
            leave_upper = False
            pos = alpha > _PIVOT_TOL
            if pos.any():
                ratios = np.full(self.m, np.inf)
                ratios[pos] = np.maximum(self.xB[pos], 0.0) / alpha[pos]
                theta = ratios.min()
            ub = self.u[self.basis]
            neg = (alpha < -_PIVOT_TOL) & np.isfinite(ub)
            if neg.any():
                ratios2 = np.full(self.m, np.inf)
                ratios2[neg] = np.maximum(ub[neg] - self.xB[neg], 0.0) / -alpha[neg]
                theta = min(theta, ratios2.min())
            else:
                ratios2 = None

            if self.u[j] <= theta:
                # Bound flip: the entering variable reaches its other bound first.
                theta = self.u[j]
                if not np.isfinite(theta):
                    return "unbounded"
                self.xB -= theta * alpha
                self.at_upper[j] = step_up
                np.clip(self.xB, 0.0, None, out=self.xB)
                # A flip leaves d and the basis alone: only j stops being eligible.
                nxt += 1
                continue
            if not np.isfinite(theta):
                return "unbounded"

            # Bland: among tied rows, the basic variable with the lowest index leaves.
            tie = theta + 1e-12 * max(1.0, abs(theta))
            rows = []
            if pos.any():
                rows.extend((int(self.basis[i]), i, False) for i in np.flatnonzero(ratios <= tie))
            if ratios2 is not None:
                rows.extend((int(self.basis[i]), i, True) for i in np.flatnonzero(ratios2 <= tie))
            _, r, leave_upper = min(rows)

            self.xB -= theta * alpha
            leaving = self.basis[r]
            self.at_upper[leaving] = leave_upper
            entering_value = theta if step_up else self.u[j] - theta
            self.pivot(r, j, d)
            free[leaving], free[j] = allowed[leaving], False
            cand = None
            self.at_upper[j] = False
            self.xB[r] = entering_value
            np.clip(self.xB, 0.0, None, out=self.xB)
            ubasic = self.u[self.basis]
            np.minimum(self.xB, ubasic, out=self.xB)

    def values(self):
        x = np.where(self.at_upper, self.u, 0.0)
        x[self.basis] = self.xB
        return x


def _standard_simplex(A, b, c, u, max_iter):
    """Two-phase simplex on ``min c.x, A x = b, 0 <= x <= u``.

    Every nonbasic column starts at zero.  Rows are sign-normalized so the
    right-hand side is nonnegative, and a unit (slack) column becomes the
    initial basic variable where its bound allows; remaining rows get
    artificials.

    Returns ``(status, x, basis, row_signs, iterations)`` with ``x`` over the
    input columns only.
    """
    m, n = A.shape
    rhs = np.asarray(b, dtype=np.float64)
    signs = np.where(rhs < 0, -1.0, 1.0)
    A = A * signs[:, None]
    rhs = rhs * signs

    basis = np.full(m, -1)
    single = np.count_nonzero(A, axis=0) == 1
    for j in np.flatnonzero(single):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] < 0 and A[i, j] == 1.0 and rhs[i] <= u[j]:
            basis[i] = j
    need_art = np.flatnonzero(basis < 0)
    n_art = need_art.size
    art = np.zeros((m, n_art))
    art[need_art, np.arange(n_art)] = 1.0
    basis[need_art] = n + np.arange(n_art)
    full = np.hstack([A, art])
    uu = np.concatenate([u, np.full(n_art, np.inf)])
    tab = _Tableau(full, rhs, uu, basis)
    allowed = np.ones(n + n_art, dtype=bool)

    def done(status, x=None):
        return status, x, tab.basis, signs, tab.iterations

    if n_art:
        c1 = np.concatenate([np.zeros(n), np.ones(n_art)])
        state = tab.run(c1, allowed, max_iter)
        if state == "limit":
            return done(Status.ITERATION_LIMIT, tab.values()[:n])
        infeas = float(c1 @ tab.values())
        if infeas > _PHASE1_TOL * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            return done(Status.INFEASIBLE)
        # Drive zero-level artificials out of the basis where possible.
        for r in range(m):
            if tab.basis[r] >= n:
                row = np.abs(tab.T[r, :n])
                row[tab.is_basic[:n]] = 0.0
                cand = np.flatnonzero(row > 1e-9)
                if cand.size:
                    j = cand[0]
                    value = tab.u[j] if tab.at_upper[j] else 0.0
                    tab.pivot(r, j, np.zeros(n + n_art))
                    tab.at_upper[j] = False
                    tab.xB[r] = value
        allowed[n:] = False
        tab.u[n:] = 0.0

    c2 = np.concatenate([c, np.zeros(n_art)])
    state = tab.run(c2, allowed, max_iter)
    if state == "unbounded":
        return done(Status.UNBOUNDED)
    if state == "limit":
        return done(Status.ITERATION_LIMIT, tab.values()[:n])
    return done(Status.OPTIMAL, _polish(A, b * signs, u, tab, n))


def _polish(A, b, u, tab, n):
    """Recompute basic values from the original columns to remove drift."""
    x = tab.values()[:n]
    basis = tab.basis
    real = basis < n
    if not real.all():
        return x
    B = A[:, basis]
    nonbasic = np.ones(n, dtype=bool)
    nonbasic[basis] = False
    rhs = b - A[:, nonbasic] @ x[nonbasic]
    try:
        xb = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        return x
    if not np.all(np.isfinite(xb)):
        return x
    x = x.copy()
    x[basis] = np.clip(xb, 0.0, u[basis])
    return x


def _basis_duals(A, c, basis):
    """Row multipliers y with c_B = B^T y, or ``None`` if B is singular."""
    n = A.shape[1]
    if np.any(basis >= n):
        return None
    try:
        return np.linalg.solve(A[:, basis].T, c[basis])
    except np.linalg.LinAlgError:
        return None


# ---------------------------------------------------------------------------
# General instances
# ---------------------------------------------------------------------------

def _solve_primal(lp: LinearProgram, max_iter: int) -> LpSolution:
    n, m = lp.n_vars, lp.n_rows
    lo, hi = lp.lower, lp.upper
    # Columns of the standard form: one per variable, two for free ones.
    cols_src, signs = [], []
    shift = np.zeros(n)
    ustd = []
    for j in range(n):
        if np.isfinite(lo[j]):
            shift[j] = lo[j]
            cols_src.append(j)
            signs.append(1.0)
            ustd.append(hi[j] - lo[j])
        elif np.isfinite(hi[j]):
            shift[j] = hi[j]
            cols_src.append(j)
            signs.append(-1.0)
            ustd.append(np.inf)
        else:
            cols_src += [j, j]
            signs += [1.0, -1.0]
            ustd += [np.inf, np.inf]
    cols_src = np.array(cols_src, dtype=np.intp)
    signs = np.array(signs)
    A = lp.A.toarray()
    Astd = A[:, cols_src] * signs
    cstd = lp.c[cols_src] * signs
    rhs = lp.b - A @ shift

    n_slack = sum(s is not Sense.EQ for s in lp.senses)
    S = np.zeros((m, n_slack))
    k = 0
    for i, s in enumerate(lp.senses):
        if s is not Sense.EQ:
            S[i, k] = 1.0 if s is Sense.LE else -1.0
            k += 1
    full = np.hstack([Astd, S])
    ns = Astd.shape[1]
    u = np.concatenate([np.array(ustd, dtype=np.float64), np.full(n_slack, np.inf)])
    c = np.concatenate([cstd, np.zeros(n_slack)])

    status, xs, basis, row_signs, iters = _standard_simplex(full, rhs, c, u, max_iter)
    if xs is None:
        return LpSolution(status, iterations=iters, method="primal",
                          flagged=status is Status.ITERATION_LIMIT)
    x = shift.copy()
    np.add.at(x, cols_src, signs * xs[:ns])
    duals = None
    if status is Status.OPTIMAL:
        y = _basis_duals(full * row_signs[:, None], c, basis)
        if y is not None:
            duals = y * row_signs
    return LpSolution(status, x, float(lp.c @ x), duals, iters, "primal",
                      flagged=status is Status.ITERATION_LIMIT)


def _singletons(lp: LinearProgram):
    """Columns usable as dual bounds: one nonzero, in an inequality row, x >= 0, cost >= 0."""
    csc = lp.A.tocsc()
    nnz = np.diff(csc.indptr)
    out = {}
    for j in np.flatnonzero(nnz == 1):
        i = int(csc.indices[csc.indptr[j]])
        if (lp.senses[i] is not Sense.EQ and lp.lower[j] == 0.0 and lp.upper[j] == np.inf
                and lp.c[j] >= 0.0):
            out[int(j)] = (i, float(csc.data[csc.indptr[j]]))
    return out


def _solve_dual(lp: LinearProgram, singles: dict, max_iter: int) -> LpSolution | None:
    """Solve through the dual; ``None`` means fall back to the primal route."""
    n, m = lp.n_vars, lp.n_rows
    rest = np.array([j for j in range(n) if j not in singles], dtype=np.intp)

    ylo = np.where([s is Sense.LE for s in lp.senses], -np.inf, 0.0)
    yhi = np.where([s is Sense.GE for s in lp.senses], np.inf, 0.0)
    eq = np.array([s is Sense.EQ for s in lp.senses])
    ylo[eq], yhi[eq] = -np.inf, np.inf
    for j, (i, a) in singles.items():
        if a > 0:
            yhi[i] = min(yhi[i], lp.c[j] / a)
        else:
            ylo[i] = max(ylo[i], lp.c[j] / a)
    if np.any(ylo > yhi):
        return None

    AJ = lp.A.tocsc()[:, rest]
    lo, hi = lp.lower[rest], lp.upper[rest]
    has_lo, has_hi = np.isfinite(lo), np.isfinite(hi)
    k = rest.size
    zl_cols = sp.identity(k, format="csc")[:, has_lo]
    zu_cols = -sp.identity(k, format="csc")[:, has_hi]
    G = sp.hstack([AJ.T, zl_cols, zu_cols]).tocsr()
    f = -np.concatenate([lp.b, lo[has_lo], -hi[has_hi]])
    nz = G.shape[1] - m
    dual = LinearProgram(f, G, [Sense.EQ] * k, lp.c[rest],
                         np.concatenate([ylo, np.zeros(nz)]),
                         np.concatenate([yhi, np.full(nz, np.inf)]))
    dsol = _solve_primal(dual, max_iter)
    if not dsol.optimal or dsol.duals is None:
        return None

    x = np.zeros(n)
    x[rest] = np.clip(-dsol.duals, lo, hi)
    activity = lp.A[:, rest] @ x[rest]
    # Each singleton takes the smallest value that satisfies its row; when a
    # row holds several, the cheapest per unit of row coverage takes it all.
    by_row: dict[int, list] = {}
    for j, (i, a) in singles.items():
        by_row.setdefault(i, []).append((lp.c[j] / abs(a), j, a))
    for i, entries in by_row.items():
        _, j, a = min(entries)
        gap = lp.b[i] - activity[i]
        if lp.senses[i] is Sense.GE and a > 0:
            x[j] = max(0.0, gap / a)
        elif lp.senses[i] is Sense.LE and a < 0:
            x[j] = max(0.0, gap / a)
    return LpSolution(Status.OPTIMAL, x, float(lp.c @ x), None, dsol.iterations, "dual")


def solve(lp: LinearProgram, method: str = "auto", max_iter: int = 200_000) -> LpSolution:
    """Solve ``lp`` to optimality or classify it as infeasible / unbounded.

    ``method`` is ``"primal"``, ``"dual"`` or ``"auto"``; the dual route is used
    automatically when singleton columns make it far smaller than the primal
    tableau.  Both routes run the same two-phase Bland simplex.
    """
    lp.validate()
    if method not in ("auto", "primal", "dual"):
        raise ValueError(f"unknown method {method!r}")
    if method != "primal":
        singles = _singletons(lp)
        n_rest = lp.n_vars - len(singles)
        use_dual = method == "dual" or (singles and lp.n_rows > 3 * max(n_rest, 1))
        if use_dual and singles:
            sol = _solve_dual(lp, singles, max_iter)
            if sol is not None and lp.max_violation(sol.x) <= 1e-7 * max(1.0, np.abs(lp.b).max(initial=0)):
                sol.info["max_violation"] = lp.max_violation(sol.x)
                return sol
    sol = _solve_primal(lp, max_iter)
    if sol.x is not None:
        sol.info["max_violation"] = lp.max_violation(sol.x)
    return sol
