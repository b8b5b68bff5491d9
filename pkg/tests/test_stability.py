import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperssg.equilibrium import solve_sse
from hyperssg.instances import InstanceGenConfig, fixture, generate_random
from hyperssg.model import ParametricPayoff, SecurityGame, ThetaSpace, pure_profile
from hyperssg.stability import (AssumptionError, certify_dsse_stability, certify_msse_stability,
                                sol_feasibility, sol_system, trick_condition)
from oracles import exact_sol_nonempty


def test_slsf_certificate():
    g = fixture("slsf")[0]
    c = sol_feasibility(g, [[1.0, 0.0]])
    assert c is not None
    assert c.lam == pytest.approx(2.0)
    assert c.y_prime == pytest.approx(np.array([[1.0, 0.0]]))
    rep = certify_msse_stability(g)
    assert rep.condition_holds and rep.hne.is_hne and rep.stable and rep.theorem_respected


def test_same_target_closed_form():
    g = generate_random(InstanceGenConfig(3, 4, seed=2))
    y = pure_profile(g, (2, 2, 2))
    c = sol_feasibility(g, y)
    r = (g.follower_tables([0.0])[1] - g.follower_tables([0.0])[0])[:, 2] / (g.Ulc[2] - g.Ulu[2])
    assert c.lam == pytest.approx(float((g.R * r).sum() / g.R.sum()), rel=1e-9)
    assert c.y_prime[:, 2] == pytest.approx(g.R)


def test_inconsistent_split_is_empty():
    # r_1(t_1) = 2, r_2(t_2) = 3 with followers on different targets
    th = ThetaSpace.finite([0], [[0]])
    g = SecurityGame.build(1, [1, 1], [1, 1], [0, 0], [[0, 0], [0, 0]], [[2, 5], [5, 3]], th)
    assert sol_feasibility(g, [[1, 0], [0, 1]]) is None


def test_a3_violation_raises():
    g = fixture("example1")[0]
    with pytest.raises(AssumptionError) as e:
        sol_feasibility(g, [[1, 0]], [0.5])
    assert "A3" in e.value.names
    with pytest.raises(AssumptionError):
        certify_msse_stability(g, [0.5])


@pytest.mark.parametrize("seed", range(25))
def test_sol_matches_exact_oracle(seed):
    rng = np.random.default_rng(seed)
    n, K = 1 + seed % 3, 2 + seed % 4
    g = generate_random(InstanceGenConfig(n, K, seed=500 + seed))
    profiles = [solve_sse(g).y, pure_profile(g, rng.integers(K, size=n))]
    for y in profiles:
        ok, _ = exact_sol_nonempty(g, y, [0.0])
        c = sol_feasibility(g, y)
        assert (c is not None) == ok
        if c is not None:
            A1, By, zero = sol_system(g, y, [0.0])
            z = c.y_prime.ravel()
            assert np.max(np.abs(A1 @ z - c.lam * By)) <= 1e-8
            assert np.all(z[zero] == 0.0)
            assert c.y_prime.sum(axis=1) == pytest.approx(g.R)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(2, 6), st.integers(0, 10 ** 6))
def test_same_target_always_certified(n, K, seed):
    g = generate_random(InstanceGenConfig(n, K, seed))
    k = seed % K
    assert sol_feasibility(g, pure_profile(g, (k,) * n)) is not None


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10 ** 6))
def test_single_follower_msse_is_stable(K, seed):
    g = generate_random(InstanceGenConfig(1, K, seed))
    rep = certify_msse_stability(g)
    assert rep.condition_holds and rep.hne.is_hne


def _trick_game():
    # follower 0 drifts towards t_1 (the leader's best-covered target) as theta grows
    theta = ThetaSpace.box([0.0], [0.0], [10.0], [11])
    aff = ParametricPayoff.affine
    return SecurityGame.build(1, [1], [5.0, 8.0], [0.0, 1.0],
                              [[ParametricPayoff.constant(3.0), aff(1.0, [1.0])]],
                              [[ParametricPayoff.constant(6.0), aff(2.0, [1.0])]], theta, "trick")


def test_trick_condition_finds_first_theta():
    g = _trick_game()
    hit = trick_condition(g)
    assert hit is not None
    th, kmax = hit
    assert kmax == 1
    from hyperssg.equilibrium import solve_msse
    assert solve_msse(g, th).chosen_targets == (1,) or any(
        p.y[0, 1] > 0 for p in solve_msse(g, th).tiebreak_trace)
    for t in g.theta.grid_points():
        if t[0] >= th[0]:
            break
        assert all(p.y[0, 1] == 0 for p in solve_msse(g, t).tiebreak_trace)
    rep = certify_dsse_stability(g)
    assert rep.condition_holds and rep.theorem_respected
    assert rep.equilibrium.leader_value == pytest.approx(8.0, abs=1e-8)


def test_trick_k1():
    th = ThetaSpace.box([0.0], [0.0], [1.0], [3])
    g = SecurityGame.build(2, [1, 2], [3.0], [1.0], [[0.0], [0.0]], [[1.0], [1.0]], th)
    hit = trick_condition(g)
    assert hit[0] == pytest.approx([0.0]) and hit[1] == 0
    rep = certify_dsse_stability(g)
    assert rep.value_matches and rep.equilibrium.leader_value == pytest.approx(2 * 3 * 3)


def test_trick_impossible():
    th = ThetaSpace.finite([0], [[0]])
    g = SecurityGame.build(1, [1], [5.0, 8.0], [0.0, 1.0], [[3.0, 0.0]], [[4.0, 1.0]], th)
    assert trick_condition(g) is None
    assert trick_condition(g, full_cover=True) is None


def test_full_cover_is_stricter():
    for s in range(3):
        g = generate_random(InstanceGenConfig(1, 3, seed=s, mode="deception"))
        if trick_condition(g, full_cover=True) is not None:
            assert trick_condition(g) is not None
