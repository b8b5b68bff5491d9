"""Equilibrium computation (SSE / MSSE / DSSE) and NE / HNE verification.

Followers are canonicalised to pure attacks: follower i puts all of R_i on one target.
The MSSE at a perceived theta is found by enumerating target assignments, one LP each.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, solve_lp
from .model import (SIMPLEX_TOL, TIE_RTOL, DomainError, SecurityGame, SpecError, StrategyProfile,
                    argmax_set, attack_values, check_followers, check_leader, leader_utility,
                    pure_profile)

VALUE_RTOL = 1e-9
BIG_M = 1e9
MILP_GAP = 1e-6
DEFAULT_ASSIGNMENT_BUDGET = 10 ** 5


class BudgetError(RuntimeError):
    """A configured enumeration / node / grid budget would be exceeded."""


@dataclass
class EquilibriumResult:
    profile: StrategyProfile
    leader_value: float
    follower_perceived: np.ndarray
    follower_actual: np.ndarray
    chosen_targets: tuple
    theta_used: np.ndarray
    tiebreak_trace: list = field(default_factory=list)
    status: str = "optimal"
    bound: float | None = None
    lp_solves: int = 0
    refined: bool = False

    @property
    def x(self) -> np.ndarray:
        return self.profile.x

    @property
    def y(self) -> np.ndarray:
        return self.profile.y


def _tol(v: float) -> float:
    # zero for the -inf sentinel so comparisons against "no incumbent yet" stay ordered
    return VALUE_RTOL * max(1.0, abs(v)) if math.isfinite(v) else 0.0


def _theta(game: SecurityGame, theta):
    if theta is None:
        return game.theta.theta0
    return game.check_theta(theta)


def _finish(game, x, targets, theta, trace, **kw) -> EquilibriumResult:
    x = np.clip(np.asarray(x, dtype=float), 0.0, None)
    x *= game.R_l / x.sum()
    y = pure_profile(game, targets)
    g = attack_values(game, x, theta)
    g0 = attack_values(game, x, game.theta.theta0, check=False)
    idx = np.arange(game.n)
    t = list(targets)
    return EquilibriumResult(StrategyProfile(x, y), leader_utility(game, x, y),
                             game.R * g[idx, t], game.R * g0[idx, t], tuple(int(k) for k in t),
                             np.array(theta, dtype=float), trace, **kw)


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def assignment_lp(game: SecurityGame, uc, uu, targets) -> LinearProgram:
    """LP over x for a fixed pure assignment: leader objective plus incentive rows."""
    K = game.K
    D = game.Ulc - game.Ulu
    G = uc - uu
    H = game.R_l * uu
    c = np.zeros(K)
    rows, rhs = [], []
    for i, k in enumerate(targets):
        c[k] += game.R[i] * D[k]
        for l in range(K):
            if l == k:
                continue
            r = np.zeros(K)
            r[l] += G[i, l]
            r[k] -= G[i, k]
            rows.append(r)
            rhs.append(H[i, k] - H[i, l])
    return LinearProgram(c, np.ones((1, K)), [game.R_l],
                         np.array(rows) if rows else None, np.array(rhs) if rows else None)


def _assignment_bounds(game: SecurityGame):
    """All assignments in lexicographic order with a per-assignment upper bound."""
    K, n = game.K, game.n
    A = np.array(list(itertools.product(range(K), repeat=n)), dtype=int).reshape(-1, n)
    D = game.Ulc - game.Ulu
    const = game.R_l * (game.R[None, :] * game.Ulu[A]).sum(axis=1)
    mass = np.zeros((A.shape[0], K))
    for i in range(n):
        np.add.at(mass, (np.arange(A.shape[0]), A[:, i]), game.R[i])
    coef = mass * D[None, :]
    return A, const, const + game.R_l * coef.max(axis=1)


def _constant(game: SecurityGame, targets) -> float:
    return game.R_l * float(sum(game.R[i] * game.Ulu[k] for i, k in enumerate(targets)))


def _pair_bounds(game: SecurityGame, uc, uu) -> np.ndarray:
    """best[i, k]: most the leader can earn from follower i if i attacks k, ignoring the
    other followers; -inf when no allocation makes k a best response for i."""
    D = game.Ulc - game.Ulu
    best = np.full((game.n, game.K), -math.inf)
    for i in range(game.n):
        for k in range(game.K):
            lp = assignment_lp(game, uc[i:i + 1], uu[i:i + 1], (k,))
            lp.c = D[k] * np.eye(game.K)[k]
            sol = solve_lp(lp)
            if sol.optimal:
                best[i, k] = game.R[i] * (sol.objective + game.R_l * game.Ulu[k])
    return best


def solve_msse(game: SecurityGame, theta=None, budget: int = DEFAULT_ASSIGNMENT_BUDGET,
               _bounds=None) -> EquilibriumResult:
    """Leader-optimal commitment when followers best-respond to their payoffs at ``theta``.

    With theta = theta0 this is the SSE. Each assignment's LP is bounded above by the sum of
    per-follower bounds and by the resource-pooling bound; assignments are visited in
    decreasing bound order so most LPs are skipped. Ties are resolved towards the
    lexicographically smallest assignment, and every tied assignment is kept in the trace.
    """
    theta = _theta(game, theta)
    if game.K ** game.n > budget:
        raise BudgetError(f"K^n = {game.K ** game.n} assignments exceeds budget {budget}")
    A, const, ub = _bounds if _bounds is not None else _assignment_bounds(game)
    uc, uu = game.follower_tables(theta, check=False)
    pair = _pair_bounds(game, uc, uu)
    solves = game.n * game.K
    ub = np.minimum(ub, pair[np.arange(game.n)[None, :], A].sum(axis=1))
    order = np.argsort(-ub, kind="stable")
    best = -math.inf
    ties = []
    for a in order:
        if ub[a] == -math.inf or ub[a] < best - _tol(best):
            break
        targets = tuple(int(k) for k in A[a])
        sol = solve_lp(assignment_lp(game, uc, uu, targets))
        solves += 1
        if not sol.optimal:
            continue
        v = sol.objective + const[a]
        if v > best + _tol(best):
            best = v
            ties = [(targets, sol.z)]
        elif v >= best - _tol(best):
            ties.append((targets, sol.z))
    if not ties:
        raise RuntimeError("no assignment admits a feasible leader allocation")
    ties.sort(key=lambda t: t[0])
    trace = [StrategyProfile(np.array(z), pure_profile(game, t)) for t, z in ties]
    targets, x = ties[0]
    return _finish(game, x, targets, theta, trace, lp_solves=solves)


def solve_sse(game: SecurityGame, **kw) -> EquilibriumResult:
    return solve_msse(game, game.theta.theta0, **kw)


# ---------------------------------------------------------------------------
# branch and bound on the big-M formulation
# ---------------------------------------------------------------------------

def _milp_relaxation(game, uc, uu, fixed):
    """LP relaxation of the big-M program with some followers' targets fixed.

    Variables: x (K), y (n*K) in [0,1], w (n*K) >= 0 standing for y_ik * x_k, a (n) free.
    """
    K, n, Rl = game.K, game.n, game.R_l
    R = game.R
    D = game.Ulc - game.Ulu
    G = uc - uu
    H = Rl * uu
    nx, ny = K, n * K
    d = nx + 2 * ny + n
    X = lambda k: k
    Y = lambda i, k: nx + i * K + k
    W = lambda i, k: nx + ny + i * K + k
    Avar = lambda i: nx + 2 * ny + i

    c = np.zeros(d)
    for i in range(n):
        for k in range(K):
            c[W(i, k)] = R[i] * D[k]
            c[Y(i, k)] = R[i] * Rl * game.Ulu[k]
    eq, beq = [], []
    r = np.zeros(d)
    r[:nx] = 1.0
    eq.append(r)
    beq.append(Rl)
    for i in range(n):
        r = np.zeros(d)
        r[[Y(i, k) for k in range(K)]] = 1.0
        eq.append(r)
        beq.append(1.0)
    le, ble = [], []

    def row(entries, b):
        r = np.zeros(d)
        for j, v in entries:
            r[j] += v
        le.append(r)
        ble.append(b)

    for i in range(n):
        for k in range(K):
            row([(W(i, k), 1.0), (X(k), -1.0)], 0.0)
            row([(W(i, k), 1.0), (Y(i, k), -Rl)], 0.0)
            row([(X(k), 1.0), (W(i, k), -1.0), (Y(i, k), Rl)], Rl)
            # a_i >= R_i g_i(k)
            row([(X(k), R[i] * G[i, k]), (Avar(i), -1.0)], -R[i] * H[i, k])
            if fixed[i] is None:
                # (a_i - R_i g_i(k)) / M <= 1 - y_ik
                row([(Avar(i), 1.0 / BIG_M), (X(k), -R[i] * G[i, k] / BIG_M), (Y(i, k), 1.0)],
                    1.0 + R[i] * H[i, k] / BIG_M)
        if fixed[i] is not None:
            k = fixed[i]
            row([(Avar(i), 1.0), (X(k), -R[i] * G[i, k])], R[i] * H[i, k])
    lb = np.zeros(d)
    ub = np.full(d, np.inf)
    ub[nx:nx + ny] = 1.0
    lb[nx + 2 * ny:] = -np.inf
    for i, k in enumerate(fixed):
        if k is not None:
            ub[[Y(i, l) for l in range(K)]] = 0.0
            lb[Y(i, k)] = ub[Y(i, k)] = 1.0
    return LinearProgram(c, np.array(eq), beq, np.array(le), ble, lb, ub)


def solve_msse_milp(game: SecurityGame, theta=None, node_budget: int = 20000) -> EquilibriumResult:
    """Best-first branch and bound, branching by fixing one follower's target at a time.

    Stops once (bound - incumbent) / |incumbent| < 1e-6. When the node budget runs out,
    the result carries status "budget-exceeded" with the incumbent and the open bound.
    """
    theta = _theta(game, theta)
    uc, uu = game.follower_tables(theta, check=False)
    K, n = game.K, game.n
    nx, ny = K, n * K

    def relax(fixed):
        sol = solve_lp(_milp_relaxation(game, uc, uu, fixed))
        return sol if sol.optimal else None

    def gap_closed(bound, inc):
        return inc > -math.inf and bound - inc <= MILP_GAP * max(abs(inc), 1e-12)

    root = (None,) * n
    sol = relax(root)
    solves = 1
    heap = []
    counter = itertools.count()
    if sol is not None:
        heapq.heappush(heap, (-sol.objective, next(counter), root, sol))
    best, best_x, best_t = -math.inf, None, None
    if sol is not None:
        # rounding: followers best-respond to the relaxed x (leader-favourable ties), which
        # keeps that x feasible for the resulting assignment
        x0 = np.clip(sol.z[:nx], 0.0, None)
        g = x0 * uc + (game.R_l - x0) * uu
        lead = x0 * (game.Ulc - game.Ulu)
        guess = tuple(max(argmax_set(g[i], TIE_RTOL), key=lambda k: (lead[k], -k))
                      for i in range(n))
        s = solve_lp(assignment_lp(game, uc, uu, guess))
        solves += 1
        if s.optimal:
            best, best_x, best_t = s.objective + _constant(game, guess), s.z, guess
    nodes = 0
    bound = -math.inf
    while heap:
        negb, _, fixed, sol = heap[0]
        bound = -negb
        if gap_closed(bound, best):
            break
        heapq.heappop(heap)
        if None not in fixed:
            if sol.objective > best:
                best, best_x, best_t = sol.objective, sol.z[:nx], fixed
            continue
        nodes += 1
        if nodes > node_budget:
            heapq.heappush(heap, (negb, next(counter), fixed, sol))
            break
        y = sol.z[nx:nx + ny].reshape(n, K)
        free = [i for i in range(n) if fixed[i] is None]
        frac = [min(y[i].max(), 1 - y[i].max()) if fixed[i] is None else -1 for i in range(n)]
        i = max(free, key=lambda j: (frac[j], -j))
        for k in np.argsort(-y[i], kind="stable"):
            child = fixed[:i] + (int(k),) + fixed[i + 1:]
            s = relax(child)
            solves += 1
            if s is not None and not gap_closed(s.objective, best):
                heapq.heappush(heap, (-s.objective, next(counter), child, s))
    else:
        bound = best
    if best_t is None:
        raise BudgetError("branch and bound found no incumbent within the node budget")
    status = "optimal" if not heap or gap_closed(bound, best) else "budget-exceeded"
    return _finish(game, best_x, best_t, theta, [], status=status, bound=max(bound, best),
                   lp_solves=solves)


# ---------------------------------------------------------------------------
# deception
# ---------------------------------------------------------------------------

def leader_value_cap(game: SecurityGame) -> float:
    """Upper bound on the leader value over every assignment and every theta."""
    return float(_assignment_bounds(game)[2].max())


def solve_dsse(game: SecurityGame, refine: bool = True,
               budget: int = DEFAULT_ASSIGNMENT_BUDGET) -> tuple[np.ndarray, EquilibriumResult]:
    """Scan the theta grid (index order) for the perceived theta that is best for the leader.

    Ties keep the smallest grid index. The scan stops early once a grid point reaches the
    theta-independent value cap, since no later point can beat it strictly. On box domains a
    local refinement (coordinate moves of half the grid step, halving 3 times) follows and
    only accepts strict improvements.
    """
    th = game.theta
    if th.size() == 0:
        raise SpecError("empty theta grid")
    bounds = _assignment_bounds(game)
    cap = float(bounds[2].max())
    best = None
    for t in th.grid_points():
        r = solve_msse(game, t, budget=budget, _bounds=bounds)
        if best is None or r.leader_value > best.leader_value + _tol(best.leader_value):
            best = r
        if best.leader_value >= cap - _tol(cap):
            return best.theta_used, best
    if refine and th.is_box and best.leader_value < cap - _tol(cap):
        lo, hi = np.asarray(th.lo, float), np.asarray(th.hi, float)
        steps = np.array([(h - l) / (g - 1) if g > 1 else 0.0 for l, h, g in zip(lo, hi, th.grid)])
        for rnd in range(1, 4):
            h = steps / 2 ** rnd
            for j in range(th.dim):
                for sgn in (-1.0, 1.0):
                    cand = best.theta_used.copy()
                    cand[j] = np.clip(cand[j] + sgn * h[j], lo[j], hi[j])
                    if np.array_equal(cand, best.theta_used):
                        continue
                    r = solve_msse(game, cand, budget=budget, _bounds=bounds)
                    if r.leader_value > best.leader_value + _tol(best.leader_value):
                        r.refined = True
                        best = r
    return best.theta_used, best


# ---------------------------------------------------------------------------
# NE / HNE checks
# ---------------------------------------------------------------------------

@dataclass
class HneCertificate:
    is_hne: bool
    leader_br_targets: list
    follower_br_sets: list
    violation: tuple | None = None
    witness: np.ndarray | None = None
    literal_is_hne: bool | None = None
    mode: str = "literal"


def _support(v, tol=SIMPLEX_TOL):
    return [int(k) for k in np.nonzero(np.asarray(v) > tol * 10)[0]]


def leader_coefficients(game: SecurityGame, y) -> np.ndarray:
    """Per-target slope of the leader objective in x: (sum_i y_i^k)(U_l^c - U_l^u)."""
    return np.asarray(y, dtype=float).sum(axis=0) * (game.Ulc - game.Ulu)


def _literal(game, x, y, theta):
    g = attack_values(game, x, theta)
    coef = leader_coefficients(game, y)
    lbr = argmax_set(coef, TIE_RTOL)
    fbr = [argmax_set(g[i], TIE_RTOL) for i in range(game.n)]
    violation = None
    if not set(_support(x)) <= set(lbr):
        k = lbr[0]
        dev = game.R_l * np.eye(game.K)[k]
        violation = ("leader", leader_utility(game, dev, y))
    else:
        for i in range(game.n):
            if not set(_support(y[i])) <= set(fbr[i]):
                violation = (f"follower {i}", float(game.R[i] * g[i].max()))
                break
    return lbr, fbr, violation


def check_ne(game: SecurityGame, profile: StrategyProfile, theta=None,
             mixed_followers: bool = False) -> bool:
    """Nash check with followers judged at ``theta`` (defaults to theta0).

    Literal by default; ``mixed_followers`` applies the same follower-splitting relaxation
    as check_hne.
    """
    return check_hne(game, profile, theta, mixed_followers=mixed_followers).is_hne


def check_hne(game: SecurityGame, profile: StrategyProfile, theta=None,
              mixed_followers: bool = True) -> HneCertificate:
    """Hyper-Nash check: leader side from the true utilities, follower side at theta.

    The literal predicate tests the given profile. With ``mixed_followers`` the follower
    profile may additionally be replaced by any split of each R_i over that follower's
    best-response set at theta (all such splits are equally good for the follower); the
    profile passes if some split makes x a leader best response. The split found is
    returned as ``witness``.
    """
    theta = _theta(game, theta)
    x = check_leader(game, profile.x)
    y = check_followers(game, profile.y)
    lbr, fbr, violation = _literal(game, x, y, theta)
    literal = violation is None
    if literal or not mixed_followers or any(
            not set(_support(y[i])) <= set(fbr[i]) for i in range(game.n)):
        return HneCertificate(literal, lbr, fbr, violation, y if literal else None, literal,
                              "mixed" if mixed_followers else "literal")
    w = _mixed_witness(game, x, y, fbr)
    if w is None:
        return HneCertificate(False, lbr, fbr, violation, None, False, "mixed")
    return HneCertificate(True, argmax_set(leader_coefficients(game, w), TIE_RTOL), fbr, None, w,
                          False, "mixed")


def _mixed_witness(game, x, y, fbr):
    """Follower splits over best-response sets that make supp(x) a leader argmax, if any.

    Variables: y'_ik for k in BR_i, then v (free). Maximises overlap with the given y so
    the witness stays as close to the canonical profile as the constraints allow.
    """
    K, n = game.K, game.n
    D = game.Ulc - game.Ulu
    cols = [(i, k) for i in range(n) for k in fbr[i]]
    d = len(cols) + 1
    c = np.zeros(d)
    eq, beq, le, ble = [], [], [], []
    for i in range(n):
        r = np.zeros(d)
        for j, (ii, k) in enumerate(cols):
            if ii == i:
                r[j] = 1.0
                c[j] = y[i, k]
        eq.append(r)
        beq.append(game.R[i])
    supp = set(_support(x))
    for k in range(K):
        r = np.zeros(d)
        for j, (i, kk) in enumerate(cols):
            if kk == k:
                r[j] = D[k]
        r[-1] = -1.0
        (eq if k in supp else le).append(r)
        (beq if k in supp else ble).append(0.0)
    lb = np.zeros(d)
    lb[-1] = -np.inf
    sol = solve_lp(LinearProgram(c, np.array(eq), beq, np.array(le) if le else None,
                                 ble if le else None, lb))
    if not sol.optimal:
        return None
    w = np.zeros((n, K))
    for j, (i, k) in enumerate(cols):
        w[i, k] = max(sol.z[j], 0.0)
    w *= (game.R / w.sum(axis=1))[:, None]
    coef = leader_coefficients(game, w)
    if not supp <= set(argmax_set(coef, TIE_RTOL)):
        return None
    return w


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

@dataclass
class BruteForceResult:
    x: np.ndarray
    targets: tuple
    leader_value: float
    slack: float
    points: int


def lipschitz_constant(game: SecurityGame) -> float:
    """Bound on |d U_l / d x| in the l1 sense for any fixed pure follower assignment."""
    return float(game.R.sum() * np.max(np.abs(game.Ulc - game.Ulu)))


def _compositions(N, K):
    if K == 1:
        return np.array([[N]])
    out = []
    for a in range(N + 1):
        rest = _compositions(N - a, K - 1)
        out.append(np.hstack([np.full((rest.shape[0], 1), a), rest]))
    return np.vstack(out)


def brute_force_sse(game: SecurityGame, theta=None, grid_step: float = 1e-3,
                    max_points: int = 3_000_000) -> BruteForceResult:
    """Scan a lattice on the leader simplex with exact leader-favourable tie-breaking.

    The lattice uses spacing grid_step * R_l per coordinate. Because the follower response
    is discontinuous in x, the optimum can be missed by at most ``slack`` =
    Lip * R_l * grid_step * K, which is reported with the result.
    """
    theta = _theta(game, theta)
    K = game.K
    N = int(round(1.0 / grid_step))
    count = math.comb(N + K - 1, K - 1)
    if count > max_points:
        raise BudgetError(f"simplex lattice has {count} points (> {max_points})")
    X = _compositions(N, K).astype(float) * (game.R_l / N)
    uc, uu = game.follower_tables(theta, check=False)
    G, H = uc - uu, game.R_l * uu
    D = game.Ulc - game.Ulu
    best_v, best_x, best_t = -math.inf, None, None
    for s in range(0, X.shape[0], 100_000):
        xs = X[s:s + 100_000]
        total = np.zeros(xs.shape[0])
        picks = []
        lead = xs * D + game.R_l * game.Ulu          # per-unit leader value on each target
        for i in range(game.n):
            g = xs * G[i] + H[i]
            top = g.max(axis=1, keepdims=True)
            ok = g >= top - 1e-12 * np.maximum(1.0, np.abs(top))
            val = np.where(ok, lead, -np.inf)
            k = val.argmax(axis=1)
            picks.append(k)
            total += game.R[i] * val[np.arange(xs.shape[0]), k]
        j = int(total.argmax())
        if total[j] > best_v:
            best_v, best_x = float(total[j]), xs[j].copy()
            best_t = tuple(int(p[j]) for p in picks)
    slack = lipschitz_constant(game) * game.R_l * grid_step * K
    return BruteForceResult(best_x, best_t, best_v, slack, X.shape[0])
