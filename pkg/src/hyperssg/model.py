"""Security game data model: parametric payoffs, theta spaces, utilities and best responses.

Targets and followers are indexed from 0 throughout the Python API.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIMPLEX_TOL = 1e-9
TIE_RTOL = 1e-7

FAMILIES = ("constant", "affine", "poly", "scaled_affine")


class SpecError(ValueError):
    """Malformed game data (shapes, resources, unknown families)."""


class DomainError(ValueError):
    """A theta value outside the configured observation space."""


# ---------------------------------------------------------------------------
# Parametric payoffs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricPayoff:
    """A differentiable map theta -> payoff.

    family        coefficients
    ------        ------------
    constant      value
    affine        const + grad . theta
    poly          sum_j coeffs[j] * theta[index]**j  (degree <= 4)
    scaled_affine base * (p0 + p_grad . theta)
    """

    family: str
    const: float = 0.0
    grad: tuple = ()
    coeffs: tuple = ()
    index: int = 0
    base: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown payoff family {self.family!r}")
        if self.family == "poly" and not 1 <= len(self.coeffs) <= 5:
            raise SpecError("poly payoff needs 1..5 coefficients (degree <= 4)")

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "ParametricPayoff":
        return cls("constant", const=float(value))

    @classmethod
    def affine(cls, const: float, grad: Sequence[float]) -> "ParametricPayoff":
        return cls("affine", const=float(const), grad=tuple(float(g) for g in grad))

    @classmethod
    def poly(cls, coeffs: Sequence[float], index: int = 0) -> "ParametricPayoff":
        return cls("poly", coeffs=tuple(float(c) for c in coeffs), index=int(index))

    @classmethod
    def scaled_affine(cls, base: float, p0: float, p_grad: Sequence[float]) -> "ParametricPayoff":
        return cls("scaled_affine", base=float(base), const=float(p0),
                   grad=tuple(float(g) for g in p_grad))

    # evaluation -------------------------------------------------------
    def value(self, theta) -> float:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.family == "constant":
            return self.const
        if self.family == "affine":
            return self.const + float(np.dot(self.grad, th))
        if self.family == "poly":
            t = th[self.index]
            return float(np.polynomial.polynomial.polyval(t, self.coeffs))
        return self.base * (self.const + float(np.dot(self.grad, th)))

    def gradient(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros(th.shape[0])
        if self.family == "constant":
            return out
        if self.family == "affine":
            out[: len(self.grad)] = self.grad
        elif self.family == "poly":
            d = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
            out[self.index] = float(np.polynomial.polynomial.polyval(th[self.index], d))
        else:
            out[: len(self.grad)] = self.base * np.asarray(self.grad)
        return out

    @property
    def is_affine(self) -> bool:
        if self.family in ("constant", "affine", "scaled_affine"):
            return True
        return all(c == 0.0 for c in self.coeffs[2:])

    def convex_on(self, lo, hi) -> bool:
        """Convexity on the box [lo, hi]; exact for every family."""
        if self.is_affine:
            return True
        d2 = np.polynomial.polynomial.polyder(self.coeffs, 2)
        a, b = float(np.atleast_1d(lo)[self.index]), float(np.atleast_1d(hi)[self.index])
        pts = [a, b]
        if len(d2) == 3 and d2[2] != 0.0:
            v = -d2[1] / (2 * d2[2])
            if a < v < b:
                pts.append(v)
        return min(float(np.polynomial.polynomial.polyval(t, d2)) for t in pts) >= 0.0

    def to_dict(self) -> dict:
        if self.family == "constant":
            return {"family": "constant", "value": self.const}
        if self.family == "affine":
            return {"family": "affine", "const": self.const, "grad": list(self.grad)}
        if self.family == "poly":
            return {"family": "poly", "coeffs": list(self.coeffs), "index": self.index}
        return {"family": "scaled_affine", "base": self.base, "p0": self.const,
                "p_grad": list(self.grad)}

    @classmethod
    def from_dict(cls, d: dict) -> "ParametricPayoff":
        allowed = {
            "constant": {"family", "value"},
            "affine": {"family", "const", "grad"},
            "poly": {"family", "coeffs", "index"},
            "scaled_affine": {"family", "base", "p0", "p_grad"},
        }
        fam = d.get("family")
        if fam not in allowed:
            raise SpecError(f"unknown payoff family {fam!r}")
        extra = set(d) - allowed[fam]
        if extra:
            raise SpecError(f"unknown keys in {fam} payoff: {sorted(extra)}")
        if fam == "constant":
            return cls.constant(d["value"])
        if fam == "affine":
            return cls.affine(d["const"], d["grad"])
        if fam == "poly":
            return cls.poly(d["coeffs"], d.get("index", 0))
        return cls.scaled_affine(d["base"], d["p0"], d["p_grad"])


def parametric_gradient(payoff: ParametricPayoff, theta) -> np.ndarray:
    return payoff.gradient(theta)


# ---------------------------------------------------------------------------
# Observation space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaSpace:
    """Either a box [lo, hi] discretised by per-dimension grid counts, or a finite point set.

    The true parameter must be one of the grid (or set) points.
    """

    true_value: tuple
    lo: tuple | None = None
    hi: tuple | None = None
    grid: tuple | None = None
    points: tuple | None = None

    def __post_init__(self):
        m = len(self.true_value)
        if m == 0:
            raise SpecError("theta dimension must be >= 1")
        if self.points is None:
            if self.lo is None or self.hi is None or self.grid is None:
                raise SpecError("box theta space needs lo, hi and grid")
            if not (len(self.lo) == len(self.hi) == len(self.grid) == m):
                raise SpecError("theta box dimension mismatch")
            if any(l > h for l, h in zip(self.lo, self.hi)):
                raise SpecError("theta box needs lo <= hi")
            if any(int(g) < 1 for g in self.grid):
                raise SpecError("grid counts must be >= 1")
        else:
            if len(self.points) == 0:
                raise SpecError("empty theta set")
            if any(len(p) != m for p in self.points):
                raise SpecError("theta set dimension mismatch")
        if self.index_of(self.true_value) is None:
            raise SpecError("true theta must be a grid/set point")

    @classmethod
    def box(cls, true_value, lo, hi, grid) -> "ThetaSpace":
        tup = lambda v: tuple(float(a) for a in np.atleast_1d(v))
        g = tuple(int(a) for a in np.atleast_1d(grid))
        if len(g) == 1 and len(tup(lo)) > 1:
            g = g * len(tup(lo))
        return cls(true_value=tup(true_value), lo=tup(lo), hi=tup(hi), grid=g)

    @classmethod
    def finite(cls, true_value, points) -> "ThetaSpace":
        pts = tuple(tuple(float(a) for a in np.atleast_1d(p)) for p in points)
        return cls(true_value=tuple(float(a) for a in np.atleast_1d(true_value)), points=pts)

    @property
    def dim(self) -> int:
        return len(self.true_value)

    @property
    def theta0(self) -> np.ndarray:
        return np.asarray(self.true_value, dtype=float)

    @property
    def is_box(self) -> bool:
        return self.points is None

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, int(g)) if g > 1 else np.array([l])
                for l, h, g in zip(self.lo, self.hi, self.grid)]

    def size(self) -> int:
        if self.points is not None:
            return len(self.points)
        return int(np.prod([int(g) for g in self.grid]))

    def grid_points(self):
        """Yield grid points in index order (last coordinate varies fastest)."""
        if self.points is not None:
            for p in self.points:
                yield np.asarray(p, dtype=float)
            return
        for combo in itertools.product(*self.axes()):
            yield np.asarray(combo, dtype=float)

    def index_of(self, theta, atol: float = 1e-12) -> int | None:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.shape[0] != self.dim:
            return None
        if self.points is not None:
            for j, p in enumerate(self.points):
                if np.all(np.abs(np.asarray(p) - th) <= atol):
                    return j
            return None
        idx = 0
        for a, t in zip(self.axes(), th):
            hit = np.nonzero(np.abs(a - t) <= atol * max(1.0, abs(t)))[0]
            if hit.size == 0:
                return None
            idx = idx * len(a) + int(hit[0])
        return idx

    def contains(self, theta, atol: float = 1e-9) -> bool:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.shape[0] != self.dim:
            return False
        if self.points is not None:
            return any(np.all(np.abs(np.asarray(p) - th) <= atol) for p in self.points)
        return bool(np.all(th >= np.asarray(self.lo) - atol) and np.all(th <= np.asarray(self.hi) + atol))

    def radius(self) -> float:
        """Distance from the true value to the farthest point of the space."""
        t0 = self.theta0
        if self.points is not None:
            return float(max(np.linalg.norm(np.asarray(p) - t0) for p in self.points))
        far = np.maximum(np.asarray(self.hi) - t0, t0 - np.asarray(self.lo))
        return float(np.linalg.norm(far))

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "true": list(self.true_value)}
        if self.points is not None:
            d["set"] = [list(p) for p in self.points]
        else:
            d["box"] = {"lo": list(self.lo), "hi": list(self.hi), "grid": list(self.grid)}
        return d


# ---------------------------------------------------------------------------
# The game
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SecurityGame:
    leader_resource: float
    follower_resources: tuple
    leader_covered: tuple
    leader_uncovered: tuple
    covered: tuple      # [n][K] ParametricPayoff
    uncovered: tuple    # [n][K] ParametricPayoff
    theta: ThetaSpace
    name: str = field(default="", compare=False)

    def __post_init__(self):
        K = len(self.leader_covered)
        if K < 1:
            raise SpecError("need at least one target")
        if len(self.leader_uncovered) != K:
            raise SpecError("leader payoff tables must have K entries")
        n = len(self.follower_resources)
        if n < 1:
            raise SpecError("need at least one follower")
        if len(self.covered) != n or len(self.uncovered) != n:
            raise SpecError("follower payoff tables must have n rows")
        for row in (*self.covered, *self.uncovered):
            if len(row) != K:
                raise SpecError("follower payoff rows must have K entries")
        if not self.leader_resource > 0 or any(not r > 0 for r in self.follower_resources):
            raise SpecError("resources must be positive")
        vals = [*self.leader_covered, *self.leader_uncovered]
        if not np.all(np.isfinite(vals)):
            raise SpecError("leader payoffs must be finite")

    @classmethod
    def build(cls, leader_resource, follower_resources, leader_covered, leader_uncovered,
              covered, uncovered, theta, name="") -> "SecurityGame":
        def wrap(table):
            return tuple(tuple(p if isinstance(p, ParametricPayoff) else ParametricPayoff.constant(p)
                               for p in row) for row in table)
        return cls(float(leader_resource),
                   tuple(float(r) for r in np.atleast_1d(follower_resources)),
                   tuple(float(v) for v in leader_covered),
                   tuple(float(v) for v in leader_uncovered),
                   wrap(covered), wrap(uncovered), theta, name)

    @property
    def K(self) -> int:
        return len(self.leader_covered)

    @property
    def n(self) -> int:
        return len(self.follower_resources)

    @property
    def R_l(self) -> float:
        return self.leader_resource

    @property
    def R(self) -> np.ndarray:
        return np.asarray(self.follower_resources, dtype=float)

    @property
    def Ulc(self) -> np.ndarray:
        return np.asarray(self.leader_covered, dtype=float)

    @property
    def Ulu(self) -> np.ndarray:
        return np.asarray(self.leader_uncovered, dtype=float)

    def check_theta(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if not self.theta.contains(th):
            raise DomainError(f"theta {th.tolist()} outside the observation space")
        return th

    def follower_tables(self, theta, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """(covered, uncovered) follower payoffs at theta, each of shape (n, K)."""
        th = self.check_theta(theta) if check else np.atleast_1d(np.asarray(theta, dtype=float))
        uc = np.array([[p.value(th) for p in row] for row in self.covered])
        uu = np.array([[p.value(th) for p in row] for row in self.uncovered])
        return uc, uu

    def follower_gradients(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of the follower tables, each of shape (n, K, m)."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        gc = np.array([[p.gradient(th) for p in row] for row in self.covered])
        gu = np.array([[p.gradient(th) for p in row] for row in self.uncovered])
        return gc, gu

    def with_theta(self, theta_space: ThetaSpace) -> "SecurityGame":
        return SecurityGame(self.leader_resource, self.follower_resources, self.leader_covered,
                            self.leader_uncovered, self.covered, self.uncovered, theta_space, self.name)


@dataclass(frozen=True)
class StrategyProfile:
    """Leader allocation x (K,) and follower allocations y (n, K)."""

    x: np.ndarray
    y: np.ndarray

    def validate(self, game: SecurityGame, tol: float = SIMPLEX_TOL) -> None:
        check_leader(game, self.x, tol)
        check_followers(game, self.y, tol)


def check_leader(game: SecurityGame, x, tol: float = SIMPLEX_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (game.K,):
        raise SpecError(f"leader strategy must have shape ({game.K},), got {x.shape}")
    if np.any(x < -tol) or abs(x.sum() - game.R_l) > tol:
        raise SpecError("leader strategy is not on its resource simplex")
    return x


def check_followers(game: SecurityGame, y, tol: float = SIMPLEX_TOL) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (game.n, game.K):
        raise SpecError(f"follower profile must have shape ({game.n}, {game.K}), got {y.shape}")
    if np.any(y < -tol) or np.any(np.abs(y.sum(axis=1) - game.R) > tol):
        raise SpecError("follower strategy is not on its resource simplex")
    return y


def pure_profile(game: SecurityGame, targets: Sequence[int]) -> np.ndarray:
    y = np.zeros((game.n, game.K))
    y[np.arange(game.n), list(targets)] = game.R
    return y


# ---------------------------------------------------------------------------
# Utilities
# ---------------------------------------------------------------------------

def leader_utility(game: SecurityGame, x, y) -> float:
    x = check_leader(game, x)
    y = check_followers(game, y)
    mass = y.sum(axis=0)
    return float(np.sum(mass * (x * game.Ulc + (game.R_l - x) * game.Ulu)))


def attack_values(game: SecurityGame, x, theta, check: bool = True) -> np.ndarray:
    """g[i, k] = x^k U_i^c(theta, t_k) + (R_l - x^k) U_i^u(theta, t_k), shape (n, K)."""
    uc, uu = game.follower_tables(theta, check=check)
    x = np.asarray(x, dtype=float)
    return x * uc + (game.R_l - x) * uu


def attack_value(game: SecurityGame, x, theta, i: int, k: int) -> float:
    return float(attack_values(game, x, theta)[i, k])


def follower_utility(game: SecurityGame, x, y_i, i: int, theta) -> float:
    x = check_leader(game, x)
    y_i = np.asarray(y_i, dtype=float)
    if y_i.shape != (game.K,):
        raise SpecError("follower strategy has the wrong shape")
    return float(np.dot(y_i, attack_values(game, x, theta)[i]))


def argmax_set(values, rtol: float = TIE_RTOL) -> list[int]:
    v = np.asarray(values, dtype=float)
    top = v.max()
    tol = rtol * max(1.0, float(np.max(np.abs(v))))
    return [int(k) for k in np.nonzero(v >= top - tol)[0]]


def best_response_set(game: SecurityGame, x, theta, i: int, rtol: float = TIE_RTOL) -> list[int]:
    return argmax_set(attack_values(game, x, theta)[i], rtol)


# ---------------------------------------------------------------------------
# Assumption flags
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Which of the standing assumptions hold for a game.

    A1: theta box compact with nonempty interior and theta0 inside
    A2: follower payoffs differentiable in theta (always true for the closed families)
    A3: leader prefers coverage, U_l^c > U_l^u on every target
    A4: followers prefer uncovered targets, U_i^c < U_i^u on every grid theta
    A5: a dominant target k exists at theta0 (U_i^c(k) >= U_i^u(l) for all i, l != k)
    """

    A1: bool
    A2: bool
    A3: bool
    A4: bool
    A5: bool
    diagnostics: list = field(default_factory=list)
    dominant_targets: list = field(default_factory=list)

    def holds(self, *names: str) -> bool:
        return all(getattr(self, nm) for nm in names)

    def failing(self, *names: str) -> list[str]:
        return [nm for nm in names if not getattr(self, nm)]


def validate_game(game: SecurityGame, max_grid: int = 20000) -> AssumptionReport:
    diags = []
    th = game.theta
    a1 = th.is_box and all(h > l for l, h in zip(th.lo, th.hi)) and th.contains(th.theta0)
    if not a1:
        diags.append("A1: observation space is not a box with nonempty interior")

    gap = game.Ulc - game.Ulu
    a3 = bool(np.all(gap > 0))
    for k in np.nonzero(gap <= 0)[0]:
        diags.append(f"A3: U_l^c(t_{k}) <= U_l^u(t_{k})")

    a4 = True
    for j, t in enumerate(th.grid_points()):
        if j >= max_grid:
            diags.append("A4: checked on the first %d grid points only" % max_grid)
            break
        uc, uu = game.follower_tables(t, check=False)
        bad = np.argwhere(uc >= uu)
        if bad.size:
            a4 = False
            i, k = bad[0]
            diags.append(f"A4: U_{i}^c >= U_{i}^u on t_{k} at theta={t.tolist()}")
            break

    uc0, uu0 = game.follower_tables(th.theta0, check=False)
    dominant = []
    for k in range(game.K):
        others = [l for l in range(game.K) if l != k]
        if not others or np.all(uc0[:, [k]] >= uu0[:, others]):
            dominant.append(k)
    a5 = bool(dominant)
    if not a5:
        diags.append("A5: no dominant target at theta0")
    return AssumptionReport(a1, True, a3, a4, a5, diags, dominant)
