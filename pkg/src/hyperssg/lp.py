"""Dense two-phase tableau simplex with Bland's rule.

Problems solved here are tiny (tens of variables), so the implementation favours
determinism and accuracy over speed: after the pivoting stops, the basic solution is
recomputed from the original data with a direct solve.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-10
FEAS_TOL = 1e-9
LAMBDA_MIN = 1e-8
LAMBDA_CAP = 1e6
DEGENERATE_RUN = 50      # degenerate pivots before switching to Bland
REINVERT_EVERY = 100


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class LPError(ValueError):
    pass


@dataclass
class LinearProgram:
    """maximize c.z  s.t.  A_eq z = b_eq,  A_le z <= b_le,  lb <= z <= ub.

    ``lb`` defaults to 0; use -inf for free variables. ``ub`` defaults to +inf.
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_le: np.ndarray | None = None
    b_le: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        d = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, d, "equality")
        self.A_le, self.b_le = _rows(self.A_le, self.b_le, d, "inequality")
        self.lb = np.zeros(d) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(d, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        if self.lb.size != d or self.ub.size != d:
            raise LPError("bound vectors must match the objective length")
        for arr in (self.c, self.A_eq, self.b_eq, self.A_le, self.b_le):
            if not np.all(np.isfinite(arr)):
                raise LPError("coefficients must be finite")

    @property
    def dim(self) -> int:
        return self.c.size

    def residual(self, z) -> float:
        """Largest row-scaled constraint violation at z (bounds included)."""
        z = np.asarray(z, dtype=float)
        worst = 0.0
        if self.A_eq.shape[0]:
            scale = np.maximum(1.0, np.abs(self.A_eq).max(axis=1))
            worst = max(worst, float(np.max(np.abs(self.A_eq @ z - self.b_eq) / scale)))
        if self.A_le.shape[0]:
            scale = np.maximum(1.0, np.abs(self.A_le).max(axis=1))
            worst = max(worst, float(np.max(np.maximum(self.A_le @ z - self.b_le, 0.0) / scale)))
        fin = np.isfinite(self.lb)
        if fin.any():
            worst = max(worst, float(np.max(np.maximum(self.lb[fin] - z[fin], 0.0))))
        fin = np.isfinite(self.ub)
        if fin.any():
            worst = max(worst, float(np.max(np.maximum(z[fin] - self.ub[fin], 0.0))))
        return worst


def _rows(A, b, d, what):
    if A is None or (hasattr(A, "__len__") and len(A) == 0):
        return np.zeros((0, d)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != d or A.shape[0] != b.size:
        raise LPError(f"{what} rows have shape {A.shape}, rhs {b.size}, expected (*, {d})")
    return A, b


@dataclass
class LpSolution:
    status: Status
    z: np.ndarray | None = None
    objective: float | None = None
    residual: float = 0.0
    pivots: int = 0
    reduced_costs: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def solve_lp(lp: LinearProgram, max_pivots: int = 50000) -> LpSolution:
    # --- change of variables: z = T z' + shift with z' >= 0 ---------------
    d = lp.dim
    cols = []       # (orig index, sign)
    shift = np.zeros(d)
    for j in range(d):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isfinite(lo):
            cols.append((j, 1.0))
            shift[j] = lo
        elif np.isfinite(hi):
            cols.append((j, -1.0))
            shift[j] = hi
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nv = len(cols)
    T = np.zeros((d, nv))
    for col, (j, s) in enumerate(cols):
        T[j, col] = s

    A_eq = lp.A_eq @ T
    b_eq = lp.b_eq - lp.A_eq @ shift
    A_le = lp.A_le @ T
    b_le = lp.b_le - lp.A_le @ shift
    # finite upper bounds on shifted-from-below variables become rows
    ub_rows, ub_rhs = [], []
    for col, (j, s) in enumerate(cols):
        if s > 0 and np.isfinite(lp.lb[j]) and np.isfinite(lp.ub[j]):
            r = np.zeros(nv)
            r[col] = 1.0
            ub_rows.append(r)
            ub_rhs.append(lp.ub[j] - lp.lb[j])
    if ub_rows:
        A_le = np.vstack([A_le, ub_rows])
        b_le = np.concatenate([b_le, ub_rhs])
    c = lp.c @ T

    res = _simplex(A_eq, b_eq, A_le, b_le, c, max_pivots)
    if res.status is not Status.OPTIMAL:
        return res
    z = T @ res.z + shift
    sol = LpSolution(Status.OPTIMAL, z, float(lp.c @ z), lp.residual(z), res.pivots,
                     res.reduced_costs)
    return sol


def _simplex(A_eq, b_eq, A_le, b_le, c, max_pivots) -> LpSolution:
    """Standard form: maximize c.z, z >= 0."""
    m_eq, m_le = A_eq.shape[0], A_le.shape[0]
    nv = c.size
    m = m_eq + m_le
    # columns: [z (nv) | slacks (m_le) | artificials (m)]
    A = np.zeros((m, nv + m_le))
    b = np.zeros(m)
    A[:m_eq, :nv] = A_eq
    b[:m_eq] = b_eq
    A[m_eq:, :nv] = A_le
    A[m_eq:, nv:] = np.eye(m_le)
    b[m_eq:] = b_le
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    basis = np.full(m, -1)
    need_art = []
    for r in range(m):
        if r >= m_eq and not neg[r]:
            basis[r] = nv + (r - m_eq)
        else:
            need_art.append(r)
    n_orig = nv + m_le
    na = len(need_art)
    tab = np.zeros((m + 1, n_orig + na + 1))
    tab[:m, :n_orig] = A
    tab[:m, -1] = b
    for a, r in enumerate(need_art):
        tab[r, n_orig + a] = 1.0
        basis[r] = n_orig + a

    pivots = 0
    if na:
        # phase 1: maximize -sum(artificials)
        tab[m, :] = 0.0
        tab[m, n_orig:n_orig + na] = 1.0
        for r in need_art:
            tab[m] -= tab[r]
        status, p = _pivot_loop(tab, basis, n_orig + na, max_pivots)
        pivots += p
        if -tab[m, -1] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LpSolution(Status.INFEASIBLE, pivots=pivots)
        # drive artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n_orig:
                row = tab[r, :n_orig]
                if np.abs(row).max(initial=0.0) > PIVOT_TOL:
                    # the artificial sits at (round-off) zero; make the pivot exactly
                    # degenerate so a small pivot element cannot spread the residue
                    tab[r, -1] = 0.0
                    _pivot(tab, basis, r, int(np.argmax(np.abs(row))))
                    pivots += 1
                else:
                    keep[r] = False
        tab = np.hstack([tab[:, :n_orig], tab[:, -1:]])
        rows = np.concatenate([np.nonzero(keep)[0], [m]])
        tab = tab[rows]
        basis = basis[keep]
        m = basis.size

    # phase 2 objective row: reduced costs stored as -(c - c_B B^-1 A)
    tab[m, :] = 0.0
    tab[m, :nv] = -c
    for r in range(m):
        j = basis[r]
        if tab[m, j] != 0.0:
            tab[m] -= tab[m, j] * tab[r]
    status, p = _pivot_loop(tab, basis, n_orig, max_pivots)
    pivots += p
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, pivots=pivots)

    # refine the basic solution against the original rows
    rows_kept = _kept_rows(A, basis, n_orig)
    B = A[np.ix_(rows_kept, basis)]
    try:
        xb = np.linalg.solve(B, b[rows_kept])
    except np.linalg.LinAlgError:
        xb = tab[:m, -1]
    zz = np.zeros(n_orig)
    zz[basis] = xb
    zz[np.abs(zz) < 1e-13] = 0.0
    zz = np.maximum(zz, 0.0)
    return LpSolution(Status.OPTIMAL, zz[:nv], float(c @ zz[:nv]), pivots=pivots,
                      reduced_costs=-tab[m, :nv].copy())


def _kept_rows(A, basis, n_orig):
    # after artificial removal the dropped rows are linearly dependent; pick rows giving
    # a nonsingular basis matrix
    m = basis.size
    if m == A.shape[0]:
        return np.arange(m)
    Bfull = A[:, basis]
    rows = []
    for r in range(A.shape[0]):
        trial = rows + [r]
        if np.linalg.matrix_rank(Bfull[trial]) == len(trial):
            rows = trial
        if len(rows) == m:
            break
    return np.asarray(rows)


def _pivot_loop(tab, basis, ncols, max_pivots):
    # Dantzig pricing; after a run of degenerate pivots fall back to Bland's rule, which
    # cannot cycle, until the objective moves again
    m = basis.size
    count = 0
    stall = 0
    start = tab.copy()
    while True:
        if count and count % REINVERT_EVERY == 0:
            _reinvert(tab, basis, start)
        obj = tab[m, :ncols]
        enter = np.nonzero(obj < -COST_TOL)[0]
        if enter.size == 0:
            return Status.OPTIMAL, count
        bland = stall >= DEGENERATE_RUN
        j = int(enter[0]) if bland else int(enter[np.argmin(obj[enter])])
        col = tab[:m, j]
        pos = col > PIVOT_TOL
        if not pos.any():
            return Status.UNBOUNDED, count
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(tab[:m, -1][pos], 0.0) / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))[0]
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        stall = stall + 1 if best <= 1e-12 else 0
        _pivot(tab, basis, r, j)
        count += 1
        if count > max_pivots:
            raise LPError("simplex pivot budget exhausted")


def _reinvert(tab, basis, start):
    """Rebuild the tableau for the current basis from the loop's starting tableau, which
    removes the round-off accumulated by long chains of row operations."""
    m = basis.size
    try:
        rows = np.linalg.solve(start[:m, basis], start[:m])
    except np.linalg.LinAlgError:
        return
    rows[:, basis] = np.eye(m)
    rows[np.abs(rows[:, -1]) < 1e-13, -1] = 0.0
    tab[:m] = rows
    tab[m] = start[m] - start[m, basis] @ rows


def _pivot(tab, basis, r, j):
    tab[r] /= tab[r, j]
    col = tab[:, j].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    basis[r] = j


@dataclass
class LambdaResult:
    feasible: bool
    lam: float = 0.0
    z: np.ndarray | None = None
    residual: float = 0.0


def max_lambda_feasibility(A, b, blocks, lambda_cap: float = LAMBDA_CAP,
                           fixed_zero=None) -> LambdaResult:
    """Maximise lambda subject to A z = lambda * b, z >= 0, sum(z[block]) = total per block.

    ``blocks`` is a list of (indices, total) pairs. ``fixed_zero`` is an optional boolean mask
    of structural zeros of z. Feasibility of the open condition lambda > 0 is reported as
    lambda* >= LAMBDA_MIN.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    d = A.shape[1]
    free = np.ones(d, dtype=bool) if fixed_zero is None else ~np.asarray(fixed_zero, dtype=bool)
    idx = np.nonzero(free)[0]
    pos = {j: p for p, j in enumerate(idx)}
    nz = idx.size
    rows = [np.concatenate([A[:, idx], -b[:, None]], axis=1)]
    rhs = [np.zeros(A.shape[0])]
    for members, total in blocks:
        r = np.zeros(nz + 1)
        for j in members:
            if j in pos:
                r[pos[j]] = 1.0
        rows.append(r[None, :])
        rhs.append([float(total)])
    c = np.zeros(nz + 1)
    c[-1] = 1.0
    ub = np.full(nz + 1, np.inf)
    ub[-1] = lambda_cap
    lp = LinearProgram(c, np.vstack(rows), np.concatenate(rhs), lb=np.zeros(nz + 1), ub=ub)
    sol = solve_lp(lp)
    if not sol.optimal:
        return LambdaResult(False)
    z = np.zeros(d)
    z[idx] = sol.z[:-1]
    lam = float(sol.z[-1])
    return LambdaResult(lam >= LAMBDA_MIN, lam, z, sol.residual)
