import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperssg.instances import InstanceGenConfig, fixture, generate_random
from hyperssg.model import (DomainError, ParametricPayoff, SecurityGame, SpecError, ThetaSpace,
                            attack_value, best_response_set, check_leader, follower_utility,
                            leader_utility, parametric_gradient, validate_game)


@pytest.fixture
def ex1():
    return fixture("example1")[0]


@pytest.fixture
def ex2():
    return fixture("example2")[0]


def test_leader_utility_example2(ex2):
    assert leader_utility(ex2, [0, 1], [[1, 0], [0, 1]]) == pytest.approx(3.0)


@pytest.mark.parametrize("tp", [0.1, 0.3, 0.5, 0.9])
def test_example1_profit_and_follower_zero(ex1, tp):
    x = [tp, 1 - tp]
    assert leader_utility(ex1, x, [[1, 0]]) == pytest.approx(tp)
    assert follower_utility(ex1, x, [1, 0], 0, [tp]) == pytest.approx(0.0, abs=1e-15)
    assert attack_value(ex1, [0.2, 0.8], [tp], 0, 0) == pytest.approx(tp - 0.2)


def test_example1_best_response(ex1):
    assert best_response_set(ex1, [0.2, 0.8], [0.5], 0) == [0]


def test_example2_follower_values(ex2):
    for x in ([0, 1], [0.3, 0.7], [1, 0]):
        assert follower_utility(ex2, x, [1, 0], 0, [1.0]) == pytest.approx(1.0)
        assert best_response_set(ex2, x, [1.0], 0) == [0]
        assert attack_value(ex2, x, [1.0], 1, 1) == pytest.approx(x[1])


def test_constant_collapse():
    th = ThetaSpace.finite([0], [[0]])
    g = SecurityGame.build(2, [1, 3], [4, 4, 4], [4, 4, 4], [[1, 1, 1]] * 2, [[1, 1, 1]] * 2, th)
    x = [0.5, 1.0, 0.5]
    y = [[1, 0, 0], [0, 1.5, 1.5]]
    assert leader_utility(g, x, y) == pytest.approx(4 * 2 * 4)
    assert follower_utility(g, x, y[1], 1, [0]) == pytest.approx(1 * 2 * 3)
    assert best_response_set(g, x, [0], 0) == [0, 1, 2]


def test_assumption_reports(ex1, ex2):
    assert "A3" in validate_game(ex1).failing("A3")
    assert validate_game(ex2).failing("A4") == ["A4"]
    g = generate_random(InstanceGenConfig(3, 4, seed=1))
    assert validate_game(g).holds("A3", "A4")


def test_domain_and_shape_errors(ex1):
    with pytest.raises(DomainError):
        follower_utility(ex1, [0.5, 0.5], [1, 0], 0, [1.5])
    with pytest.raises(SpecError):
        check_leader(ex1, [0.5, 0.6])
    with pytest.raises(SpecError):
        check_leader(ex1, [1.0])
    with pytest.raises(SpecError):
        ThetaSpace.box([0.35], [0], [1], [11])      # true value off the grid


def test_mtd_gradient_vanishes_at_centre():
    game, _ = fixture("mtd", a=0.3)
    assert parametric_gradient(game.covered[1][0], [0.5]) == pytest.approx([0.0], abs=1e-12)
    assert game.covered[1][0].value([0.5]) == pytest.approx(0.041 * (0.25 - 10 + 0.3 - 0.25) ** 2
                                                            + 4.305)


def test_simple_gradients():
    assert parametric_gradient(ParametricPayoff.affine(1.0, [2.0, -3.0]), [5, 5]) == \
        pytest.approx([2.0, -3.0])
    assert parametric_gradient(ParametricPayoff.constant(7), [0.3]) == pytest.approx([0.0])


def _random_payoff(rng, m):
    fam = rng.integers(4)
    if fam == 0:
        return ParametricPayoff.constant(rng.normal())
    if fam == 1:
        return ParametricPayoff.affine(rng.normal(), rng.normal(size=m))
    if fam == 2:
        return ParametricPayoff.poly(rng.normal(size=int(rng.integers(1, 6))), int(rng.integers(m)))
    return ParametricPayoff.scaled_affine(rng.normal(), rng.normal(), rng.normal(size=m))


def test_gradient_finite_differences_1000():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 4))
        p = _random_payoff(rng, m)
        th = rng.uniform(-2, 2, size=m)
        g = parametric_gradient(p, th)
        h = 1e-6
        fd = np.array([(p.value(th + h * e) - p.value(th - h * e)) / (2 * h) for e in np.eye(m)])
        err = np.max(np.abs(g - fd) / np.maximum(1.0, np.abs(fd)))
        worst = max(worst, err)
    assert worst <= 1e-6


def test_payoff_dict_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = _random_payoff(rng, 2)
        assert ParametricPayoff.from_dict(p.to_dict()) == p
    with pytest.raises(SpecError):
        ParametricPayoff.from_dict({"family": "constant", "value": 1, "slope": 2})


def _simplex_point(rng, K, mass):
    return rng.dirichlet(np.ones(K)) * mass


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 10 ** 6))
def test_linearity_decomposition(n, K, seed):
    game = generate_random(InstanceGenConfig(n, K, seed))
    rng = np.random.default_rng(seed)
    x = _simplex_point(rng, K, game.R_l)
    for i in range(n):
        yi = _simplex_point(rng, K, game.R[i])
        direct = follower_utility(game, x, yi, i, [0.0])
        split = sum(yi[k] * attack_value(game, x, [0.0], i, k) for k in range(K))
        assert direct == pytest.approx(split, rel=1e-12, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(2, 5), st.integers(0, 10 ** 6))
def test_best_response_dominance(n, K, seed):
    game = generate_random(InstanceGenConfig(n, K, seed))
    rng = np.random.default_rng(seed)
    x = _simplex_point(rng, K, game.R_l)
    for i in range(n):
        br = best_response_set(game, x, [0.0], i)
        yi = np.zeros(K)
        yi[br] = _simplex_point(rng, len(br), game.R[i])
        u = follower_utility(game, x, yi, i, [0.0])
        for _ in range(1000 // n):
            other = follower_utility(game, x, _simplex_point(rng, K, game.R[i]), i, [0.0])
            assert u >= other - 1e-9 * max(1.0, abs(u))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 10 ** 6),
       st.sampled_from(["misperception", "deception"]))
def test_generator_is_deterministic(n, K, seed, mode):
    if mode == "deception" and n * K > 8:
        K = max(1, 8 // n)
    a = generate_random(InstanceGenConfig(n, K, seed, mode=mode))
    b = generate_random(InstanceGenConfig(n, K, seed, mode=mode))
    assert a == b
    assert validate_game(a).holds("A3")
