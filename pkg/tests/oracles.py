"""Independent reference implementations used only by the tests.

Everything here works in exact rational arithmetic (fractions.Fraction) and shares no code
with the package beyond reading payoff tables out of a game.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def F(v):
    return Fraction(float(v))


def exact_lp(c, A_eq=(), b_eq=(), A_le=(), b_le=()):
    """max c.x s.t. A_eq x = b_eq, A_le x <= b_le, x >= 0, by two-phase Bland simplex on
    Fractions. Returns ("optimal", x, value) / ("infeasible", None, None) / ("unbounded", ...).
    """
    c = [F(v) for v in c]
    d = len(c)
    rows = [([F(a) for a in r], F(b)) for r, b in zip(A_eq, b_eq)]
    n_le = len(A_le)
    # slack columns for inequality rows
    for j, (r, b) in enumerate(zip(A_le, b_le)):
        rows.append(([F(a) for a in r] + [Fraction(int(t == j)) for t in range(n_le)], F(b)))
    width = d + n_le
    rows = [(r + [Fraction(0)] * (width - len(r)), b) for r, b in rows]
    rows = [([-a for a in r], -b) if b < 0 else (r, b) for r, b in rows]
    m = len(rows)
    # phase 1 with one artificial per row
    T = [r + [Fraction(int(t == i)) for t in range(m)] + [b] for i, (r, b) in enumerate(rows)]
    basis = [width + i for i in range(m)]
    ncol = width + m

    def run(obj, allowed):
        while True:
            # reduced costs of obj (maximise)
            red = [obj[j] - sum(obj[basis[i]] * T[i][j] for i in range(m)) for j in range(ncol)]
            enter = next((j for j in range(ncol) if allowed[j] and red[j] > 0), None)
            if enter is None:
                return "optimal"
            ratios = [(T[i][-1] / T[i][enter], basis[i], i) for i in range(m) if T[i][enter] > 0]
            if not ratios:
                return "unbounded"
            _, _, r = min(ratios)
            piv = T[r][enter]
            T[r] = [v / piv for v in T[r]]
            for i in range(m):
                if i != r and T[i][enter] != 0:
                    f = T[i][enter]
                    T[i] = [a - f * b for a, b in zip(T[i], T[r])]
            basis[r] = enter

    ph1 = [Fraction(0)] * width + [Fraction(-1)] * m
    run(ph1, [True] * ncol)
    if sum(T[i][-1] for i in range(m) if basis[i] >= width) > 0:
        return "infeasible", None, None
    # drive remaining (zero-level) artificials out where possible
    for i in range(m):
        if basis[i] >= width:
            j = next((j for j in range(width) if T[i][j] != 0), None)
            if j is not None:
                piv = T[i][j]
                T[i] = [v / piv for v in T[i]]
                for q in range(m):
                    if q != i and T[q][j] != 0:
                        f = T[q][j]
                        T[q] = [a - f * b for a, b in zip(T[q], T[i])]
                basis[i] = j
    obj = c + [Fraction(0)] * (n_le + m)
    allowed = [True] * width + [False] * m
    status = run(obj, allowed)
    if status == "unbounded":
        return "unbounded", None, None
    x = [Fraction(0)] * ncol
    for i in range(m):
        x[basis[i]] = T[i][-1]
    x = x[:d]
    return "optimal", x, sum(a * b for a, b in zip(c, x))


# ---------------------------------------------------------------------------
# game oracles
# ---------------------------------------------------------------------------

def tables(game, theta):
    uc = [[F(game.covered[i][k].value(theta)) for k in range(game.K)] for i in range(game.n)]
    uu = [[F(game.uncovered[i][k].value(theta)) for k in range(game.K)] for i in range(game.n)]
    return uc, uu


def exact_msse(game, theta):
    """Leader-optimal pure-assignment equilibrium by exhaustive enumeration, exact LPs.

    Returns (value, x, targets) for the best assignment, scanning assignments in
    lexicographic order and keeping the first maximiser.
    """
    K, n = game.K, game.n
    uc, uu = tables(game, theta)
    Rl = F(game.R_l)
    R = [F(r) for r in game.R]
    Ulc = [F(v) for v in game.Ulc]
    Ulu = [F(v) for v in game.Ulu]
    best = None
    for ts in itertools.product(range(K), repeat=n):
        A_le, b_le = [], []
        for i, k in enumerate(ts):
            for j in range(K):
                if j == k:
                    continue
                # g_i(j) <= g_i(k): x_j (uc_j - uu_j) + Rl uu_j <= x_k (uc_k - uu_k) + Rl uu_k
                row = [Fraction(0)] * K
                row[j] += uc[i][j] - uu[i][j]
                row[k] -= uc[i][k] - uu[i][k]
                A_le.append(row)
                b_le.append(Rl * (uu[i][k] - uu[i][j]))
        c = [Fraction(0)] * K
        const = Fraction(0)
        for i, k in enumerate(ts):
            c[k] += R[i] * (Ulc[k] - Ulu[k])
            const += R[i] * Rl * Ulu[k]
        st, x, v = exact_lp(c, [[1] * K], [Rl], A_le, b_le)
        if st != "optimal":
            continue
        if best is None or v + const > best[0]:
            best = (v + const, x, ts)
    return best


def exact_sol_nonempty(game, y, theta, tol=1e-9):
    """Does some y' (simplex blocks, zeros where y is zero) give A1 y' = lam * B y, lam > 0?"""
    K, n = game.K, game.n
    uc, uu = tables(game, theta)
    gap = [F(a) - F(b) for a, b in zip(game.Ulc, game.Ulu)]
    By = [sum(F(y[i][k]) for i in range(n)) for k in range(K)]
    # variables: y'_ik (n*K), lam ; constraints:
    A_eq, b_eq = [], []
    for k in range(K):
        row = [Fraction(0)] * (n * K + 1)
        for i in range(n):
            row[i * K + k] = (uu[i][k] - uc[i][k]) / gap[k]
        row[-1] = -By[k]
        A_eq.append(row)
        b_eq.append(Fraction(0))
    for i in range(n):
        row = [Fraction(0)] * (n * K + 1)
        for k in range(K):
            row[i * K + k] = Fraction(1)
        A_eq.append(row)
        b_eq.append(F(game.R[i]))
        for k in range(K):
            if y[i][k] <= tol:
                z = [Fraction(0)] * (n * K + 1)
                z[i * K + k] = Fraction(1)
                A_eq.append(z)
                b_eq.append(Fraction(0))
    cap = [Fraction(0)] * (n * K) + [Fraction(1)]
    c = [Fraction(0)] * (n * K) + [Fraction(1)]
    st, z, lam = exact_lp(c, A_eq, b_eq, [cap], [Fraction(10 ** 6)])
    return st == "optimal" and lam > Fraction(1, 10 ** 8), (None if z is None else lam)


def best_targets(values, rtol=1e-7):
    v = np.asarray(values, dtype=float)
    top = v.max()
    return {k for k in range(v.size) if v[k] >= top - rtol * max(1.0, abs(top))}


def literal_hne(game, x, y, theta):
    """Leader support inside the argmax of its per-target marginal gains, follower supports
    inside their perceived best responses."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    Y = y.sum(axis=0)
    gains = Y * (game.Ulc - game.Ulu)
    lead_ok = {k for k in range(game.K) if x[k] > 1e-8} <= best_targets(gains)
    uc, uu = game.follower_tables(theta)
    g = x * uc + (game.R_l - x) * uu
    fol_ok = all({k for k in range(game.K) if y[i, k] > 1e-8} <= best_targets(g[i])
                 for i in range(game.n))
    return lead_ok and fol_ok


def mixed_hne(game, x, y, theta):
    """Literal follower check, and some split y' of each follower over its best-response set
    under which x is a leader best response (exact feasibility LP)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    uc, uu = game.follower_tables(theta)
    g = x * uc + (game.R_l - x) * uu
    brs = [sorted(best_targets(g[i])) for i in range(game.n)]
    for i in range(game.n):
        if not {k for k in range(game.K) if y[i, k] > 1e-8} <= set(brs[i]):
            return False
    K, n = game.K, game.n
    D = [F(a) - F(b) for a, b in zip(game.Ulc, game.Ulu)]
    sup = [k for k in range(K) if x[k] > 1e-8]
    A_eq, b_eq, A_le, b_le = [], [], [], []
    for i in range(n):
        row = [Fraction(0)] * (n * K)
        for k in brs[i]:
            row[i * K + k] = Fraction(1)
        A_eq.append(row)
        b_eq.append(F(game.R[i]))
        for k in range(K):
            if k not in brs[i]:
                z = [Fraction(0)] * (n * K)
                z[i * K + k] = Fraction(1)
                A_eq.append(z)
                b_eq.append(Fraction(0))
    # for k in supp(x), j any: Y'_j D_j - Y'_k D_k <= 0
    for k in sup:
        for j in range(K):
            if j == k:
                continue
            row = [Fraction(0)] * (n * K)
            for i in range(n):
                row[i * K + j] += D[j]
                row[i * K + k] -= D[k]
            A_le.append(row)
            b_le.append(Fraction(0))
    st, _, _ = exact_lp([0] * (n * K), A_eq, b_eq, A_le, b_le)
    return st == "optimal"
