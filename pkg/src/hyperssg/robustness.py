"""Robustness radii around the true observation theta0, analytic and sampled.

The analytic radii compare the gap between a follower's best and second-best attack values
at the SSE allocation against how fast those values can move with theta. The sampled radii
look for the nearest theta (along a fixed set of rays) where the invariance actually breaks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import VALUE_RTOL, solve_msse, solve_sse
from .instances import rng
from .model import TIE_RTOL, SecurityGame, argmax_set, attack_values, check_leader, validate_game

N_DIRECTIONS = 32
N_SHELLS = 16
BISECT_STEPS = 24
MAX_SIGMA_POINTS = 20000


@dataclass
class RobustnessIngredients:
    gamma1: list
    gamma2: list
    g1: np.ndarray
    g2: np.ndarray
    grad_star: np.ndarray
    sigma: float
    sigma_source: str
    degenerate: list

    @property
    def any_degenerate(self) -> bool:
        return any(self.degenerate)


@dataclass
class RobustnessReport:
    ingredients: RobustnessIngredients
    delta_msse: float
    delta_dsse: float
    x_sse: np.ndarray
    empirical_msse: float | None = None
    empirical_dsse: float | None = None
    shell_width: float = 0.0
    tags: list = field(default_factory=list)

    @property
    def bound_respected(self) -> bool:
        ok = True
        if self.empirical_msse is not None:
            ok &= self.empirical_msse >= self.delta_msse - self.shell_width
        if self.empirical_dsse is not None:
            ok &= self.empirical_dsse >= self.delta_dsse - self.shell_width
        return bool(ok)


def payoff_sigma(game: SecurityGame, max_points: int = MAX_SIGMA_POINTS) -> tuple[float, str]:
    """Largest gradient norm of any follower payoff over the theta grid.

    Exact when every payoff is affine (constant gradient); otherwise a grid-sampled value.
    """
    payoffs = [p for row in (*game.covered, *game.uncovered) for p in row]
    exact = all(p.is_affine for p in payoffs)
    pts = [game.theta.theta0] if exact else []
    if not exact:
        for j, t in enumerate(game.theta.grid_points()):
            if j >= max_points:
                break
            pts.append(t)
    best = 0.0
    for t in pts:
        for p in payoffs:
            best = max(best, float(np.linalg.norm(p.gradient(t))))
    return best, "exact-affine" if exact else "grid-sampled"


def robustness_ingredients(game: SecurityGame, x_sse=None, sigma: float | None = None
                           ) -> RobustnessIngredients:
    x = solve_sse(game).x if x_sse is None else check_leader(game, x_sse)
    th0 = game.theta.theta0
    g = attack_values(game, x, th0)
    gc, gu = game.follower_gradients(th0)
    gamma1, gamma2, g1, g2, gstar, degen = [], [], [], [], [], []
    for i in range(game.n):
        top = argmax_set(g[i], TIE_RTOL)
        rest = [k for k in range(game.K) if k not in top]
        gamma1.append(top)
        g1.append(float(g[i].max()))
        if rest:
            sub = argmax_set(g[i, rest], TIE_RTOL)
            gamma2.append([rest[j] for j in sub])
            g2.append(float(g[i, rest].max()))
            degen.append(False)
        else:
            gamma2.append([])
            g2.append(g1[-1])
            degen.append(True)
        grads = [x[k] * gc[i, k] + (game.R_l - x[k]) * gu[i, k] for k in top]
        gstar.append(max(float(np.linalg.norm(v)) for v in grads))
    if sigma is None:
        sigma, source = payoff_sigma(game)
    else:
        source = "user-override"
    return RobustnessIngredients(gamma1, gamma2, np.array(g1), np.array(g2), np.array(gstar),
                                 float(sigma), source, degen)


def _radius(gaps, denoms, cap):
    out = math.inf
    for gap, den in zip(gaps, denoms):
        if gap <= 0:
            return 0.0
        out = min(out, gap / den if den > 0 else math.inf)
    return min(out, cap)


def delta_theta_msse(ing: RobustnessIngredients, R_l: float, cap: float = math.inf) -> float:
    """min_i (g1_i - g2_i) / (grad*_i + sigma R_l); 0 when degenerate, capped at ``cap``."""
    if ing.any_degenerate:
        return 0.0
    return _radius(ing.g1 - ing.g2, ing.grad_star + ing.sigma * R_l, cap)


def delta_theta_dsse(ing: RobustnessIngredients, R_l: float, cap: float = math.inf) -> float:
    """min_i (g1_i - g2_i) / (2 sigma R_l); 0 when degenerate, capped at ``cap``."""
    if ing.any_degenerate:
        return 0.0
    return _radius(ing.g1 - ing.g2, np.full(len(ing.g1), 2 * ing.sigma * R_l), cap)


# ---------------------------------------------------------------------------
# sampled invariance regions
# ---------------------------------------------------------------------------

def sample_directions(dim: int, count: int = N_DIRECTIONS, seed: int = 0) -> np.ndarray:
    """Unit directions: the 2*dim coordinate axes first, then seeded Gaussian draws."""
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    if dim == 1 or count <= axes.shape[0]:
        return axes[:max(count, 2)] if dim > 1 else axes
    extra = rng(seed, 99).standard_normal((count - axes.shape[0], dim))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([axes, extra])


def _ray_exit(theta0, u, lo, hi):
    t = math.inf
    for j in range(len(u)):
        if u[j] > 0:
            t = min(t, (hi[j] - theta0[j]) / u[j])
        elif u[j] < 0:
            t = min(t, (lo[j] - theta0[j]) / u[j])
    return t


def _scan(game: SecurityGame, holds, directions=None, shells: int = N_SHELLS, seed: int = 0):
    """Smallest distance from theta0 at which ``holds(theta)`` fails, over sampled rays.

    Each ray is probed on ``shells`` equally spaced radii up to the box radius; the first
    failing shell is refined by bisection. Returns (radius, shell width).
    """
    th = game.theta
    th0 = th.theta0
    rmax = th.radius()
    if not th.is_box:
        pts = sorted(th.grid_points(), key=lambda p: float(np.linalg.norm(p - th0)))
        for p in pts:
            if not holds(p):
                return float(np.linalg.norm(p - th0)), 0.0
        return rmax, 0.0
    lo, hi = np.asarray(th.lo, float), np.asarray(th.hi, float)
    if rmax == 0:
        return 0.0, 0.0
    U = sample_directions(th.dim, seed=seed) if directions is None else directions
    width = rmax / shells
    best = rmax
    for u in U:
        reach = min(_ray_exit(th0, u, lo, hi), rmax)
        prev = 0.0
        for s in range(1, shells + 1):
            r = s * width
            if r > reach + 1e-12:
                r = reach
            if r <= prev or r >= best:
                break
            if not holds(th0 + r * u):
                a, b = prev, r
                for _ in range(BISECT_STEPS):
                    mid = 0.5 * (a + b)
                    if holds(th0 + mid * u):
                        a = mid
                    else:
                        b = mid
                best = min(best, b)
                break
            prev = r
    return best, width


def favoured_targets(game: SecurityGame, x, theta):
    """Each follower's best response at theta with ties broken for the leader."""
    g = attack_values(game, x, theta, check=False)
    lead = x * (game.Ulc - game.Ulu) + game.R_l * game.Ulu
    out = []
    for i in range(game.n):
        br = argmax_set(g[i], TIE_RTOL)
        out.append(max(br, key=lambda k: (lead[k], -k)))
    return out


def empirical_invariance_msse(game: SecurityGame, x_sse=None, fixed_leader: bool = True,
                              seed: int = 0, directions=None) -> tuple[float, float]:
    """Sampled radius within which every follower's true utility is unchanged.

    Followers re-best-respond to x_sse at the perceived theta (or, with ``fixed_leader`` off,
    follow the full MSSE at that theta); their utility is then evaluated at theta0 with the
    SSE allocation and compared with the SSE utility.
    """
    sse = solve_sse(game)
    x = sse.x if x_sse is None else check_leader(game, x_sse)
    th0 = game.theta.theta0
    g0 = attack_values(game, x, th0)
    base = g0[np.arange(game.n), favoured_targets(game, x, th0)] * game.R

    def holds(theta):
        t = favoured_targets(game, x, theta) if fixed_leader else \
            list(solve_msse(game, theta).chosen_targets)
        vals = g0[np.arange(game.n), t] * game.R
        return bool(np.all(np.abs(vals - base) <= VALUE_RTOL * np.maximum(1.0, np.abs(base))))

    return _scan(game, holds, directions, seed=seed)


def empirical_invariance_dsse(game: SecurityGame, seed: int = 0, directions=None
                              ) -> tuple[float, float]:
    """Sampled radius of the largest ball around theta0 on which deception does not pay."""
    v0 = solve_sse(game).leader_value
    tol = VALUE_RTOL * max(1.0, abs(v0))

    def holds(theta):
        return solve_msse(game, theta).leader_value <= v0 + tol

    return _scan(game, holds, directions, seed=seed)


def premise_tags(game: SecurityGame, need_dominant: bool = False) -> list:
    tags = []
    th = game.theta
    if th.is_box:
        for row in (*game.covered, *game.uncovered):
            if not all(p.convex_on(th.lo, th.hi) for p in row):
                tags.append("premise-unverified")
                break
    rep = validate_game(game)
    tags += [f"{a}-fails" for a in rep.failing("A3", "A4")]
    if need_dominant and not rep.A5:
        tags.append("A5-fails")
    return tags


def robustness_report(game: SecurityGame, sigma: float | None = None, empirical: bool = True,
                      which: tuple = ("msse", "dsse"), seed: int = 0,
                      x_sse=None) -> RobustnessReport:
    """Both radii, plus the sampled ones for the kinds named in ``which``.

    ``x_sse`` replaces the solved SSE allocation (the sampled DSSE radius always compares
    against the solved SSE value).
    """
    x = solve_sse(game).x if x_sse is None else check_leader(game, x_sse)
    ing = robustness_ingredients(game, x, sigma)
    cap = game.theta.radius()
    rep = RobustnessReport(ing, delta_theta_msse(ing, game.R_l, cap),
                           delta_theta_dsse(ing, game.R_l, cap), x,
                           tags=premise_tags(game, need_dominant="dsse" in which))
    if ing.any_degenerate:
        rep.tags.append("degenerate")
    if empirical:
        if "msse" in which:
            rep.empirical_msse, rep.shell_width = empirical_invariance_msse(game, x, seed=seed)
        if "dsse" in which:
            rep.empirical_dsse, rep.shell_width = empirical_invariance_dsse(game, seed=seed)
    return rep
