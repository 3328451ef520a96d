"""Exact linear programming and linear systems over the rationals.

Everything here works on ``fractions.Fraction``; there is no floating
point.  The simplex keeps the tableau as sparse dict rows because the
flow programs built by the solvers have only a handful of nonzeros per
row.  Inside the pivoting loops the entries are gmpy2 rationals when
gmpy2 is installed, which is an order of magnitude faster than Fraction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = {LE: LE, EQ: EQ, GE: GE, "≤": LE, "=": EQ, "≥": GE}

Row = Union[Sequence, Dict[int, object]]

# consecutive degenerate pivots tolerated before falling back to the least-index rule
_DEGENERATE_STREAK = 50


try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


def _out(x) -> Fraction:
    if type(x) is Fraction:
        return x
    return Fraction(int(x.numerator), int(x.denominator))


class LpError(ValueError):
    """Raised for malformed programs."""


class SingularMatrix(ArithmeticError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise LpError("floating point coefficient %r; use Fraction" % (x,))
    return Fraction(x)


@dataclass
class LinearProgram:
    """A linear program with named variables and sparse constraint rows.

    Rows may be given densely (one entry per variable) or as a dict from
    variable index to coefficient.  Variables are nonnegative unless
    declared free.
    """

    names: List[str] = field(default_factory=list)
    nonneg: List[bool] = field(default_factory=list)
    rows: List[tuple] = field(default_factory=list)
    objective: Optional[Dict[int, Fraction]] = None
    maximize: bool = True

    @classmethod
    def dense(cls, n_vars, constraints, objective=None, maximize=True, nonneg=None):
        lp = cls()
        for j in range(n_vars):
            lp.add_var("x%d" % j, True if nonneg is None else nonneg[j])
        for row, rel, rhs in constraints:
            lp.add_constraint(row, rel, rhs)
        if objective is not None:
            lp.set_objective(objective, maximize)
        return lp

    @property
    def n_vars(self):
        return len(self.names)

    def add_var(self, name=None, nonneg=True) -> int:
        self.names.append(name if name is not None else "x%d" % len(self.names))
        self.nonneg.append(bool(nonneg))
        return len(self.names) - 1

    def _sparse(self, row: Row) -> Dict[int, Fraction]:
        out: Dict[int, Fraction] = {}
        if isinstance(row, dict):
            items = row.items()
        else:
            if len(row) != self.n_vars:
                raise LpError("row has %d coefficients for %d variables" % (len(row), self.n_vars))
            items = enumerate(row)
        for j, c in items:
            if not (isinstance(j, int) and 0 <= j < self.n_vars):
                raise LpError("unknown variable index %r" % (j,))
            c = _frac(c)
            if c:
                out[j] = out.get(j, Fraction(0)) + c
        return {j: c for j, c in out.items() if c}

    def add_constraint(self, row: Row, rel: str, rhs) -> None:
        if rel not in _RELATIONS:
            raise LpError("unknown relation %r" % (rel,))
        self.rows.append((self._sparse(row), _RELATIONS[rel], _frac(rhs)))

    def set_objective(self, row: Row, maximize=True) -> None:
        self.objective = self._sparse(row)
        self.maximize = maximize

    def check(self, point: Sequence[Fraction]) -> List[int]:
        """Indices of constraints violated by ``point`` (exact)."""
        bad = []
        for k, (row, rel, rhs) in enumerate(self.rows):
            lhs = sum((c * point[j] for j, c in row.items()), Fraction(0))
            if (rel == LE and lhs > rhs) or (rel == GE and lhs < rhs) or (rel == EQ and lhs != rhs):
                bad.append(k)
        for j, nn in enumerate(self.nonneg):
            if nn and point[j] < 0:
                bad.append(-1 - j)
        return bad

    def value(self, point) -> Fraction:
        return sum((c * point[j] for j, c in (self.objective or {}).items()), Fraction(0))


@dataclass
class LpResult:
    status: str  # "optimal", "feasible", "infeasible", "unbounded"
    point: Optional[List[Fraction]] = None
    value: Optional[Fraction] = None
    ray: Optional[List[Fraction]] = None
    pivots: int = 0

    @property
    def ok(self):
        return self.status in ("optimal", "feasible")


class _Tableau:
    """Sparse full tableau; row i reads  sum_j a_ij x_j = b_i  with x_basis[i] a unit column."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.obj: Dict[int, Fraction] = {}
        self.obj_rhs = _Q(0)
        self.pivots = 0
        self.bland = False
        self.degenerate_streak = 0
        self.col_rows: Dict[int, set] = {}
        for i, r in enumerate(rows):
            for j in r:
                self.col_rows.setdefault(j, set()).add(i)

    def set_objective(self, cost: Dict[int, Fraction]):
        # reduced costs for maximizing cost.x: d_j = -c_j + sum_i c_B(i) a_ij
        obj = {j: -c for j, c in cost.items() if c}
        z = _Q(0)
        for i, b in enumerate(self.basis):
            cb = cost.get(b)
            if cb:
                for j, a in self.rows[i].items():
                    obj[j] = obj.get(j, _Q(0)) + cb * a
                z += cb * self.rhs[i]
        self.obj = {j: c for j, c in obj.items() if c}
        self.obj_rhs = z

    def pivot(self, r: int, col: int):
        row = self.rows[r]
        piv = row[col]
        if piv != 1:
            inv = 1 / piv
            for j in row:
                row[j] *= inv
            self.rhs[r] *= inv
        for i in list(self.col_rows[col]):
            if i == r:
                continue
            other = self.rows[i]
            f = other[col]
            for j, a in row.items():
                v = other.get(j, 0) - f * a
                if v:
                    if j not in other:
                        self.col_rows.setdefault(j, set()).add(i)
                    other[j] = v
                else:
                    other.pop(j, None)
                    self.col_rows[j].discard(i)
            self.rhs[i] -= f * self.rhs[r]
        f = self.obj.get(col)
        if f:
            for j, a in row.items():
                v = self.obj.get(j, 0) - f * a
                if v:
                    self.obj[j] = v
                else:
                    self.obj.pop(j, None)
            self.obj_rhs -= f * self.rhs[r]
        self.basis[r] = col
        self.pivots += 1

    def drop_row(self, r: int):
        for j in self.rows[r]:
            self.col_rows[j].discard(r)
        last = len(self.rows) - 1
        if r != last:
            for j in self.rows[last]:
                self.col_rows[j].discard(last)
                self.col_rows[j].add(r)
            self.rows[r] = self.rows[last]
            self.rhs[r] = self.rhs[last]
            self.basis[r] = self.basis[last]
        self.rows.pop()
        self.rhs.pop()
        self.basis.pop()

    def drop_columns(self, cols):
        for j in cols:
            for i in self.col_rows.pop(j, ()):
                self.rows[i].pop(j, None)
            self.obj.pop(j, None)

    def optimize(self) -> Optional[int]:
        """Primal simplex; returns an unbounded entering column, or None at optimum."""
        while True:
            col = self._entering()
            if col is None:
                return None
            r = self._leaving(col)
            if r is None:
                return col
            if self.rhs[r] == 0:
                self.degenerate_streak += 1
                if self.degenerate_streak > _DEGENERATE_STREAK:
                    self.bland = True
            else:
                self.degenerate_streak = 0
            self.pivot(r, col)

    def _entering(self):
        best, best_val = None, _Q(0)
        for j, d in self.obj.items():
            if d >= 0:
                continue
            if self.bland:
                if best is None or j < best:
                    best = j
            elif d < best_val or (d == best_val and j < best):
                best, best_val = j, d
        return best

    def _leaving(self, col):
        best, best_ratio = None, None
        for i in self.col_rows.get(col, ()):
            a = self.rows[i][col]
            if a > 0:
                ratio = self.rhs[i] / a
                if (best is None or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[i] < self.basis[best])):
                    best, best_ratio = i, ratio
        return best

    def primal(self, n_cols):
        x = [Fraction(0)] * n_cols
        for i, b in enumerate(self.basis):
            if b < n_cols:
                x[b] = _out(self.rhs[i])
        return x


def solve_lp(lp: LinearProgram) -> LpResult:
    """Two-phase simplex.

    Dantzig's rule is used for speed; after a run of degenerate pivots the
    solver switches permanently to the least-index rule, which cannot cycle,
    so the method always terminates.
    """
    n = lp.n_vars
    # standard-form columns: one per variable, plus a negative copy of each free variable
    neg_col = {}
    n_cols = n
    for j in range(n):
        if not lp.nonneg[j]:
            neg_col[j] = n_cols
            n_cols += 1
    n_struct = n_cols
    rows, rhs, basis, artificial = [], [], [], set()
    for coeffs, rel, b in lp.rows:
        row = {}
        b = _Q(b)
        for j, c in coeffs.items():
            row[j] = c = _Q(c)
            if j in neg_col:
                row[neg_col[j]] = -c
        if b < 0:
            row = {j: -c for j, c in row.items()}
            b = -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        if rel == LE:
            row[n_cols] = _Q(1)
            basis.append(n_cols)
            n_cols += 1
        else:
            if rel == GE:
                row[n_cols] = _Q(-1)
                n_cols += 1
            row[n_cols] = _Q(1)
            basis.append(n_cols)
            artificial.add(n_cols)
            n_cols += 1
        rows.append(row)
        rhs.append(b)
    tab = _Tableau(rows, rhs, basis)

    if artificial:
        tab.set_objective({a: _Q(-1) for a in artificial})
        tab.optimize()
        if tab.obj_rhs < 0:
            return LpResult("infeasible", pivots=tab.pivots)
        # drive zero-valued artificials out of the basis, dropping redundant rows
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] in artificial:
                col = next((j for j in sorted(tab.rows[i]) if j not in artificial), None)
                if col is None:
                    tab.drop_row(i)
                    continue
                tab.pivot(i, col)
            i += 1
        tab.drop_columns(artificial)
        tab.bland = False
        tab.degenerate_streak = 0

    def to_original(x):
        return [x[j] - (x[neg_col[j]] if j in neg_col else 0) for j in range(n)]

    if lp.objective is None:
        return LpResult("feasible", point=to_original(tab.primal(n_struct)), pivots=tab.pivots)

    sign = 1 if lp.maximize else -1
    cost = {}
    for j, c in lp.objective.items():
        cost[j] = _Q(sign * c)
        if j in neg_col:
            cost[neg_col[j]] = _Q(-sign * c)
    tab.set_objective(cost)
    col = tab.optimize()
    point = to_original(tab.primal(n_struct))
    if col is not None:
        direction = [Fraction(0)] * n_cols
        direction[col] = Fraction(1)
        for i in tab.col_rows.get(col, ()):
            direction[tab.basis[i]] = -_out(tab.rows[i][col])
        return LpResult("unbounded", point=point, ray=to_original(direction[:n_struct]),
                        pivots=tab.pivots)
    return LpResult("optimal", point=point, value=lp.value(point), pivots=tab.pivots)


def solve_linear_system(A, b) -> List[Fraction]:
    """Solve A x = b exactly by Gaussian elimination.

    ``A`` is a list of rows, each either a dense sequence or a dict
    ``{column: coefficient}``.  Raises SingularMatrix when A is singular.
    """
    n = len(A)
    if len(b) != n:
        raise LpError("right-hand side has %d entries for %d rows" % (len(b), n))
    rows = []
    for r in A:
        if isinstance(r, dict):
            d = {j: _Q(_frac(c)) for j, c in r.items() if c}
            if any(not 0 <= j < n for j in d):
                raise LpError("column index out of range")
        else:
            if len(r) != n:
                raise LpError("matrix is not square")
            d = {j: _Q(_frac(c)) for j, c in enumerate(r) if c}
        rows.append(d)
    rhs = [_Q(_frac(v)) for v in b]
    col_rows: Dict[int, set] = {}
    for i, r in enumerate(rows):
        for j in r:
            col_rows.setdefault(j, set()).add(i)
    pivot_row_of = {}
    done = set()
    for col in range(n):
        cands = [i for i in col_rows.get(col, ()) if i not in done]
        if not cands:
            raise SingularMatrix("matrix is singular")
        # sparsest candidate keeps fill-in down
        r = min(cands, key=lambda i: (len(rows[i]), i))
        done.add(r)
        pivot_row_of[col] = r
        row = rows[r]
        inv = 1 / row[col]
        for j in row:
            row[j] *= inv
        rhs[r] *= inv
        for i in list(col_rows[col]):
            if i == r:
                continue
            other = rows[i]
            f = other[col]
            for j, a in row.items():
                v = other.get(j, 0) - f * a
                if v:
                    if j not in other:
                        col_rows.setdefault(j, set()).add(i)
                    other[j] = v
                else:
                    other.pop(j, None)
                    col_rows[j].discard(i)
            rhs[i] -= f * rhs[r]
    return [_out(rhs[pivot_row_of[c]]) for c in range(n)]
