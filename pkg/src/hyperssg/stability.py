"""Stability certificates: the SOL(y, theta') system and the misperception / deception checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import (DEFAULT_ASSIGNMENT_BUDGET, EquilibriumResult, HneCertificate, check_hne,
                          solve_dsse, solve_msse, solve_msse_milp)
from .lp import LAMBDA_CAP, max_lambda_feasibility
from .model import SecurityGame, SpecError, check_followers, validate_game

SUPPORT_TOL = 1e-9


class AssumptionError(SpecError):
    def __init__(self, names, detail=""):
        self.names = list(names)
        super().__init__(f"assumption(s) {', '.join(self.names)} violated" + (f": {detail}" if detail else ""))


@dataclass
class SolCertificate:
    y_prime: np.ndarray
    lam: float
    residual: float


@dataclass
class StabilityReport:
    equilibrium: EquilibriumResult
    condition_holds: bool
    certificate: object
    hne: HneCertificate
    theorem_respected: bool
    value_matches: bool | None = None
    expected_value: float | None = None

    @property
    def stable(self) -> bool:
        return self.condition_holds and self.hne.is_hne


def cover_ratios(game: SecurityGame, theta) -> np.ndarray:
    """r[i, k] = (U_i^u - U_i^c) / (U_l^c - U_l^u) at theta; requires U_l^c != U_l^u."""
    gap = game.Ulc - game.Ulu
    if np.any(gap == 0):
        bad = [int(k) for k in np.nonzero(gap == 0)[0]]
        raise AssumptionError(["A3"], f"U_l^c = U_l^u on targets {bad}")
    uc, uu = game.follower_tables(theta, check=False)
    return (uu - uc) / gap


def sol_system(game: SecurityGame, y, theta):
    """(A1, B y, structural-zero mask) for the flattened follower profile y' (index i*K + k)."""
    y = check_followers(game, y)
    r = cover_ratios(game, theta)
    K, n = game.K, game.n
    A1 = np.zeros((K, n * K))
    for i in range(n):
        A1[np.arange(K), i * K + np.arange(K)] = r[i]
    By = y.sum(axis=0)
    zero = (y <= SUPPORT_TOL).ravel()
    return A1, By, zero


def sol_feasibility(game: SecurityGame, y, theta=None) -> SolCertificate | None:
    """Witness (y', lambda) of A1(theta) y' = lambda B y, y'_ik = 0 where y_ik = 0, or None."""
    theta = game.theta.theta0 if theta is None else game.check_theta(theta)
    A1, By, zero = sol_system(game, y, theta)
    K = game.K
    blocks = [(range(i * K, (i + 1) * K), game.R[i]) for i in range(game.n)]
    res = max_lambda_feasibility(A1, By, blocks, LAMBDA_CAP, zero)
    if not res.feasible:
        return None
    yp = res.z.reshape(game.n, K)
    resid = float(np.max(np.abs(A1 @ res.z - res.lam * By)))
    return SolCertificate(yp, res.lam, resid)


def _require(game: SecurityGame, names):
    rep = validate_game(game)
    bad = rep.failing(*names)
    if bad:
        raise AssumptionError(bad, "; ".join(d for d in rep.diagnostics if d[:2] in bad))
    return rep


def certify_msse_stability(game: SecurityGame, theta=None, check_assumptions: bool = True,
                           mixed_followers: bool = True,
                           budget: int = DEFAULT_ASSIGNMENT_BUDGET,
                           milp: bool = False) -> StabilityReport:
    """Solve the MSSE at theta, test SOL nonemptiness on its follower profile, and run the
    HNE check; the sufficient condition must imply HNE."""
    if check_assumptions:
        _require(game, ("A3", "A4"))
    eq = solve_msse_milp(game, theta) if milp else solve_msse(game, theta, budget=budget)
    cert = sol_feasibility(game, eq.y, eq.theta_used)
    hne = check_hne(game, eq.profile, eq.theta_used, mixed_followers=mixed_followers)
    cond = cert is not None
    return StabilityReport(eq, cond, cert, hne, (not cond) or hne.is_hne)


def best_covered_target(game: SecurityGame) -> int:
    return int(np.argmax(game.Ulc))


def trick_condition(game: SecurityGame, budget: int = DEFAULT_ASSIGNMENT_BUDGET,
                    full_cover: bool = False):
    """First grid theta whose MSSE sends every follower to the leader's best-covered target.

    Returns (theta, k_max) or None. An MSSE counts when any profile tied at the optimum has
    all followers on k_max. With ``full_cover`` the tied profile must also put the whole
    leader resource on k_max.
    """
    kmax = best_covered_target(game)
    want = (kmax,) * game.n
    for t in game.theta.grid_points():
        eq = solve_msse(game, t, budget=budget)
        for p in eq.tiebreak_trace:
            if tuple(int(k) for k in np.argmax(p.y, axis=1)) != want:
                continue
            if full_cover and p.x[kmax] < game.R_l * (1 - 1e-9):
                continue
            return t, kmax
    return None


def certify_dsse_stability(game: SecurityGame, check_assumptions: bool = True,
                           mixed_followers: bool = True, refine: bool = True,
                           budget: int = DEFAULT_ASSIGNMENT_BUDGET,
                           full_cover: bool = False) -> StabilityReport:
    """Check the deception condition, solve the DSSE and test it for HNE.

    When the condition holds the DSSE value must equal R_l * U_l^c(t_kmax) * sum_i R_i.
    """
    if check_assumptions:
        _require(game, ("A1", "A3", "A4"))
    trick = trick_condition(game, budget=budget, full_cover=full_cover)
    theta_star, eq = solve_dsse(game, refine=refine, budget=budget)
    hne = check_hne(game, eq.profile, theta_star, mixed_followers=mixed_followers)
    cond = trick is not None
    expected = game.R_l * float(game.Ulc.max()) * float(game.R.sum())
    matches = None
    if cond:
        matches = abs(eq.leader_value - expected) <= 1e-8 * max(1.0, abs(expected))
    respected = (not cond) or (hne.is_hne and bool(matches))
    return StabilityReport(eq, cond, trick, hne, respected, matches, expected)
