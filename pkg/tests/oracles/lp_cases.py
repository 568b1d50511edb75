"""Random small LPs with bounded feasible sets, and classified edge cases."""

import numpy as np
import scipy.sparse as sp

from privsignal.lp import LinearProgram


def random_bounded_lp(rng, max_vars=6, max_rows=8):
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    lo = rng.integers(-5, 3, size=n).astype(float)
    hi = lo + rng.integers(1, 8, size=n)
    # a point inside the box makes the instance feasible
    x0 = lo + rng.random(n) * (hi - lo)
    act = A @ x0
    senses, b = [], []
    for i in range(m):
        s = rng.choice(["<=", ">=", "=="], p=[0.45, 0.45, 0.10])
        senses.append(s)
        slack = float(rng.integers(0, 4))
        b.append(act[i] + slack if s == "<=" else act[i] - slack if s == ">=" else act[i])
    c = rng.integers(-6, 7, size=n).astype(float)
    return LinearProgram(c, sp.csr_matrix(A), senses, np.array(b), lo, hi)


def _lp(c, rows, senses, b, lo=None, hi=None):
    return LinearProgram(np.array(c, float), sp.csr_matrix(np.array(rows, float)), senses,
                         np.array(b, float), lo, hi)


def edge_cases():
    """(name, LinearProgram, expected status value)."""
    inf = np.inf
    cases = [
        ("x>=1 and x<=0", _lp([1], [[1], [1]], [">=", "<="], [1, 0]), "infeasible"),
        ("min -x unbounded", _lp([-1], [[0]], ["<="], [0]), "unbounded"),
        ("x+y<=-1 nonneg", _lp([1, 1], [[1, 1]], ["<="], [-1]), "infeasible"),
        ("equalities clash", _lp([0, 0], [[1, 1], [1, 1]], ["==", "=="], [1, 2]), "infeasible"),
        ("bounds vs row", _lp([1], [[1]], [">="], [5], [0], [4]), "infeasible"),
        ("ray along y", _lp([0, -1], [[1, -1]], ["<="], [2]), "unbounded"),
        ("free var unbounded", _lp([1], [[0]], ["=="], [0], [-inf], [inf]), "unbounded"),
        ("free var bounded", _lp([1], [[1]], [">="], [-3], [-inf], [inf]), "optimal"),
        ("x-y>=1,y-x>=1", _lp([0, 0], [[1, -1], [-1, 1]], [">=", ">="], [1, 1]), "infeasible"),
        ("unbounded diag", _lp([-1, -1], [[1, -1], [-1, 1]], ["<=", "<="], [1, 1]), "unbounded"),
        ("degenerate optimum", _lp([-1, -1], [[1, 1], [1, 0], [0, 1], [1, 1]],
                                   ["<=", "<=", "<=", "<="], [1, 1, 1, 1]), "optimal"),
        ("neg rhs ge", _lp([1, 2], [[-1, -1]], [">="], [-4]), "optimal"),
        ("upper bounds only", _lp([-1, -2], [[0, 0]], ["<="], [0], [-inf, -inf], [3, 4]),
         "optimal"),
        ("lower -inf ray", _lp([1, 0], [[0, 1]], ["<="], [1], [-inf, 0], [inf, inf]),
         "unbounded"),
        ("3d infeasible", _lp([1, 1, 1], [[1, 1, 1], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
                              ["<=", ">=", ">=", ">="], [2, 1, 1, 1]), "infeasible"),
        ("3d unbounded", _lp([-1, 0, 0], [[0, 1, 1]], ["=="], [1]), "unbounded"),
        ("redundant equalities", _lp([1, 1], [[1, 1], [2, 2]], ["==", "=="], [2, 4]), "optimal"),
        ("empty box row", _lp([1, 1], [[1, 1]], [">="], [10], [0, 0], [4, 5]), "infeasible"),
        ("cycling classic", _lp([-0.75, 150, -0.02, 6],
                                [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]],
                                ["<=", "<=", "<="], [0, 0, 1]), "optimal"),
        ("ray with bound", _lp([-1, 1], [[1, -1]], [">="], [0], [0, 0], [inf, 5]), "unbounded"),
    ]
    return cases
