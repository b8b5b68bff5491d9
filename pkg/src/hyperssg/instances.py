"""Seeded random instances and the named fixture games.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence([seed, stream])``, with a
separate stream for every tensor, so adding a tensor never shifts the others' draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ParametricPayoff, SecurityGame, SpecError, ThetaSpace

# streams
_LEADER_C, _LEADER_U, _FOLLOW_C, _FOLLOW_U, _RES, _SLOPE = range(6)


def rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass(frozen=True)
class InstanceGenConfig:
    n: int
    K: int
    seed: int = 0
    mode: str = "misperception"          # or "deception"
    leader_covered: tuple = (5.0, 10.0)
    leader_uncovered: tuple = (0.0, 5.0)
    follower_covered: tuple = (0.0, 5.0)
    follower_uncovered: tuple = (5.0, 10.0)
    resources: tuple = (1.0, 5.0)
    shift_box: tuple = (0.0, 5.0)        # deception mode: theta_{i,k} range
    grid: int | None = None              # deception mode: grid points per dimension

    def __post_init__(self):
        if self.n < 1 or self.K < 1:
            raise SpecError("n and K must be positive")
        if self.mode not in ("misperception", "deception"):
            raise SpecError(f"unknown generation mode {self.mode!r}")


def default_deception_grid(n: int, K: int) -> int:
    """Points per theta-dimension for deception instances: 3 while the grid stays small."""
    return 3 if n * K <= 5 else 2


def generate_random(cfg: InstanceGenConfig) -> SecurityGame:
    n, K, s = cfg.n, cfg.K, cfg.seed
    ulc = rng(s, _LEADER_C).uniform(*cfg.leader_covered, size=K)
    ulu = rng(s, _LEADER_U).uniform(*cfg.leader_uncovered, size=K)
    uc = rng(s, _FOLLOW_C).uniform(*cfg.follower_covered, size=(n, K))
    uu = rng(s, _FOLLOW_U).uniform(*cfg.follower_uncovered, size=(n, K))
    res = rng(s, _RES).uniform(*cfg.resources, size=n + 1)
    name = f"{cfg.mode}-n{n}-K{K}-s{s}"
    if cfg.mode == "misperception":
        # payoffs are the perceived ones; the observation space is the single point 0
        theta = ThetaSpace.finite([0.0], [[0.0]])
        return SecurityGame.build(res[0], res[1:], ulc, ulu, uc, uu, theta, name)
    m = n * K
    g = cfg.grid or default_deception_grid(n, K)
    lo, hi = cfg.shift_box
    theta = ThetaSpace.box([lo] * m, [lo] * m, [hi] * m, [g] * m)

    def shifted(base):
        return [[ParametricPayoff.affine(base[i, k], np.eye(m)[i * K + k]) for k in range(K)]
                for i in range(n)]
    return SecurityGame.build(res[0], res[1:], ulc, ulu, shifted(uc), shifted(uu), theta, name)


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

@dataclass
class FixtureInfo:
    name: str
    notes: list = field(default_factory=list)
    params: dict = field(default_factory=dict)


def _const(v):
    return ParametricPayoff.constant(v)


def example1(grid: int = 10) -> tuple[SecurityGame, FixtureInfo]:
    """Single follower whose perceived gap on t_1 makes the leader's value equal theta'.

    The open observation interval (0, 1) is closed to [0, 0.9] so a DSSE exists on the grid.
    """
    theta = ThetaSpace.box([0.5], [0.0], [0.9], [grid])
    game = SecurityGame.build(
        1, [1], [1, 0], [0, 0],
        [[ParametricPayoff.poly([-1, 1]), _const(0)]],
        [[ParametricPayoff.poly([0, 1]), _const(0)]],
        theta, "example1")
    return game, FixtureInfo("example1", ["theta box closed to [0, 0.9]; theta0 = 0.5"])


def example2() -> tuple[SecurityGame, FixtureInfo]:
    theta = ThetaSpace.finite([0.0], [[0.0], [1.0]])
    f1 = [ParametricPayoff.poly([0, 1]), ParametricPayoff.poly([1, -1])]
    game = SecurityGame.build(
        1, [1, 1], [1, 1], [2, 3],
        [f1, [_const(1), _const(1)]],
        [f1, [_const(0), _const(0)]],
        theta, "example2")
    info = FixtureInfo("example2", params={
        "dsse_profile": {"x": [0.0, 1.0], "y": [[1.0, 0.0], [0.0, 1.0]], "theta": [1.0]}})
    return game, info


def _quartic(scale, shift, const):
    """scale * ((t - 0.5)^2 + shift)^2 + const as power-basis coefficients in t."""
    P = np.polynomial.Polynomial
    inner = P([0.25 + shift, -1.0, 1.0])
    return tuple((scale * inner ** 2 + const).coef)


def mtd(a: float = 0.3, grid: int = 21) -> tuple[SecurityGame, FixtureInfo]:
    """Two followers; the second perceives quartic payoffs parameterised by migration cost a.

    Only follower 2's payoffs are published for this setting; leader and follower 1 reuse the
    two-follower infrastructure-protection constants (U_l^c=(3.2,2), U_l^u=(2,1),
    follower 1 covered (3,1), uncovered (4,2)).
    """
    theta = ThetaSpace.box([0.5], [0.0], [1.0], [grid])
    poly = ParametricPayoff.poly
    cov2 = [poly(_quartic(0.041, -10 + a, 4.305)), _const(0)]
    unc2 = [poly(_quartic(-0.05, 10 - a, 5.1532)), poly(_quartic(-0.004, -10 + a, 0.82))]
    game = SecurityGame.build(1, [1, 1], [3.2, 2.0], [2.0, 1.0],
                              [[_const(3), _const(1)], cov2],
                              [[_const(4), _const(2)], unc2], theta, f"mtd(a={a})")
    return game, FixtureInfo("mtd", ["leader and follower-1 payoffs borrowed"], {"a": a})


def counterterrorism(seed: int = 0, grid: int = 41) -> tuple[SecurityGame, FixtureInfo]:
    """Six attack forms against five cities with a misperceived success rate.

    True payoffs are uniform on [0, 0.7]; each (covered, uncovered) pair is sorted so the
    leader prefers coverage and followers prefer uncovered targets. Followers perceive
    p(theta) = d * theta + 0.2 times the true payoff, d uniform on [-1, 1].
    """
    n, K = 6, 5
    lead = np.sort(rng(seed, _LEADER_C).uniform(0.0, 0.7, size=(K, 2)), axis=1)
    fol = np.sort(rng(seed, _FOLLOW_C).uniform(0.0, 0.7, size=(n, K, 2)), axis=2)
    d = rng(seed, _SLOPE).uniform(-1.0, 1.0, size=(n, K))
    theta = ThetaSpace.box([0.0], [-0.2], [0.2], [grid])
    sa = ParametricPayoff.scaled_affine
    cov = [[sa(fol[i, k, 0], 0.2, [d[i, k]]) for k in range(K)] for i in range(n)]
    unc = [[sa(fol[i, k, 1], 0.2, [d[i, k]]) for k in range(K)] for i in range(n)]
    game = SecurityGame.build(1, [1] * n, lead[:, 1], lead[:, 0], cov, unc, theta,
                              f"counterterrorism(seed={seed})")
    return game, FixtureInfo("counterterrorism", params={"seed": seed, "d": d.tolist()})


def cps(seed: int = 55, dmax: float = 1.0, grid: int = 41) -> tuple[SecurityGame, FixtureInfo]:
    """One administrator, one attacker, nine attack methods; values uniform on [0, 2.5].

    The attacker perceives U^u(theta, t_k) = U^u(t_k) + d_k theta^2 with d_k = dmax * u_k,
    u_k uniform on [0, 1] and shared across dmax, so widening D scales the same draws.
    The default seed is the smallest one whose draw has a dominant target at theta0.
    """
    K = 9
    lead = np.sort(rng(seed, _LEADER_C).uniform(0.0, 2.5, size=(K, 2)), axis=1)
    fol = np.sort(rng(seed, _FOLLOW_C).uniform(0.0, 2.5, size=(K, 2)), axis=1)
    d = dmax * rng(seed, _SLOPE).uniform(0.0, 1.0, size=K)
    theta = ThetaSpace.box([0.0], [-1.0], [1.0], [grid])
    cov = [[_const(fol[k, 0]) for k in range(K)]]
    unc = [[ParametricPayoff.poly([fol[k, 1], 0.0, d[k]]) for k in range(K)]]
    game = SecurityGame.build(1, [1], lead[:, 1], lead[:, 0], cov, unc, theta,
                              f"cps(seed={seed}, D=(0,{dmax:g}))")
    return game, FixtureInfo("cps", params={"seed": seed, "dmax": dmax, "d": d.tolist()})


def slsf() -> tuple[SecurityGame, FixtureInfo]:
    """Single leader, single follower, two targets; the SSE is x = (5/7, 2/7) on t_1."""
    theta = ThetaSpace.finite([0.0], [[0.0]])
    game = SecurityGame.build(1, [1], [5, 5], [0, 0], [[0, 0]], [[10, 4]], theta, "slsf")
    return game, FixtureInfo("slsf", params={"x": [5 / 7, 2 / 7], "value": 25 / 7})


def robust_toy(grid: int = 21) -> tuple[SecurityGame, FixtureInfo]:
    """One follower, two targets, U^c = 0, U^u(t_1) = 2 + theta, U^u(t_2) = 1 on [-1, 1].

    The allocation x = (1, 0) used for hand-computed radii is not this game's SSE, so it is
    shipped in ``params["x_sse"]`` for callers to pass explicitly.
    """
    theta = ThetaSpace.box([0.0], [-1.0], [1.0], [grid])
    game = SecurityGame.build(1, [1], [2.0, 1.0], [0.0, 0.0],
                              [[_const(0), _const(0)]],
                              [[ParametricPayoff.affine(2.0, [1.0]), _const(1)]],
                              theta, "robust_toy")
    return game, FixtureInfo("robust_toy", ["x_sse is supplied, not solved for"],
                             {"x_sse": [1.0, 0.0]})


FIXTURES = {"example1": example1, "example2": example2, "mtd": mtd,
            "counterterrorism": counterterrorism, "cps": cps, "robust_toy": robust_toy,
            "slsf": slsf}


def fixture(name: str, **params) -> tuple[SecurityGame, FixtureInfo]:
    if name not in FIXTURES:
        raise SpecError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}")
    return FIXTURES[name](**params)


def generate_affine(n: int, K: int, m: int = 1, seed: int = 0, dominant: bool = False,
                    slope: float = 0.4, grid: int = 5) -> SecurityGame:
    """Random game whose follower payoffs are affine in theta on the box [-1, 1]^m, theta0 = 0.

    Base values follow the misperception ranges; each payoff gets a gradient with entries
    uniform on [-slope/m, slope/m]. With ``dominant`` the last target is made attractive to
    every follower (covered payoff in [10, 12], uncovered in [12, 15]) so that it beats all
    other uncovered payoffs at theta0.
    """
    ulc = rng(seed, _LEADER_C).uniform(5, 10, size=K)
    ulu = rng(seed, _LEADER_U).uniform(0, 5, size=K)
    uc = rng(seed, _FOLLOW_C).uniform(0, 5, size=(n, K))
    uu = rng(seed, _FOLLOW_U).uniform(5, 10, size=(n, K))
    if dominant:
        uc[:, -1] = rng(seed, 10).uniform(10, 12, size=n)
        uu[:, -1] = rng(seed, 11).uniform(12, 15, size=n)
    res = rng(seed, _RES).uniform(1, 5, size=n + 1)
    s = slope / m
    dc = rng(seed, _SLOPE).uniform(-s, s, size=(n, K, m))
    du = rng(seed, _SLOPE + 1).uniform(-s, s, size=(n, K, m))
    theta = ThetaSpace.box([0.0] * m, [-1.0] * m, [1.0] * m, [grid] * m)
    cov = [[ParametricPayoff.affine(uc[i, k], dc[i, k]) for k in range(K)] for i in range(n)]
    unc = [[ParametricPayoff.affine(uu[i, k], du[i, k]) for k in range(K)] for i in range(n)]
    return SecurityGame.build(res[0], res[1:], ulc, ulu, cov, unc, theta,
                              f"affine-n{n}-K{K}-m{m}-s{seed}{'-dom' if dominant else ''}")
