import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppo_fdiv.mdp import (InvalidMdpError, Mdp, accumulated_visitation_apply,
                          discounted_state_distribution, load_mdp, mdp_from_dict, random_mdp,
                          save_mdp, transition_under_policy, uniform_distribution,
                          validate_distribution, validate_mdp)
from ppo_fdiv.policy import PolicyTable, policy_from_params


def neumann_occupancy(mdp, probs, init, tol=1e-13):
    p_pi = transition_under_policy(mdp, probs)
    g = mdp.gamma
    horizon = int(np.ceil(np.log(tol * (1 - g)) / np.log(g))) + 1 if g > 0 else 1
    row, acc = np.array(init, float), np.zeros(len(init))
    for t in range(horizon):
        acc += g ** t * row
        row = row @ p_pi
    return (1 - g) * acc


def neumann_apply(mdp, probs, v, tol=1e-13):
    p_pi = transition_under_policy(mdp, probs)
    g = mdp.gamma
    horizon = int(np.ceil(np.log(tol * (1 - g)) / np.log(g))) + 1
    col, acc = np.array(v, float), np.zeros(len(v))
    for t in range(horizon):
        acc += g ** t * col
        col = p_pi @ col
    return acc


def test_single_state_valid():
    mdp = Mdp(np.ones((1, 1, 1)), [[0.5]], 0.9, 1.0)
    assert validate_mdp(mdp) == []


def test_bad_row_sum_names_location():
    mdp = Mdp(np.full((1, 1, 1), 0.99), [[0.5]], 0.9, 1.0)
    report = validate_mdp(mdp)
    assert len(report) == 1
    assert "(s=0,a=0)" in report[0]


def test_negative_reward_reported():
    mdp = Mdp(np.ones((1, 1, 1)), [[-0.1]], 0.9, 1.0)
    report = validate_mdp(mdp)
    assert len(report) == 1
    assert "reward out of [0,r_max]" in report[0]


def test_multiple_violations_all_listed():
    p = np.full((2, 2, 2), 0.5)
    p[1, 0] = [0.7, 0.7]
    r = np.array([[0.2, 2.0], [0.1, 0.3]])
    report = validate_mdp(Mdp(p, r, 1.0, 1.0))
    assert len(report) == 3
    assert any("(s=1,a=0)" in m for m in report)
    assert any("(s=0,a=1)" in m for m in report)
    assert any("gamma" in m for m in report)


def test_shape_mismatch_reported():
    assert validate_mdp(Mdp(np.ones((2, 1, 1)), [[0.5]], 0.9, 1.0))


def test_distribution_validation():
    assert validate_distribution([0.5, 0.5], 2) == []
    assert validate_distribution([0.5, 0.6], 2)
    assert validate_distribution([1.0, 0.0], 2) == []
    assert validate_distribution([1.0, 0.0], 2, explorative=True)


def test_transition_deterministic_chain():
    n = 3
    p = np.zeros((n, 2, n))
    for s in range(n):
        p[s, 0, (s + 1) % n] = 1.0
        p[s, 1, s] = 1.0
    mdp = Mdp(p, np.zeros((n, 2)), 0.9, 1.0)
    probs = np.zeros((n, 2))
    probs[:, 0] = 1.0
    p_pi = transition_under_policy(mdp, probs)
    assert np.array_equal(p_pi, np.roll(np.eye(n), 1, axis=1))


def test_transition_uniform():
    mdp = Mdp(np.full((4, 2, 4), 0.25), np.zeros((4, 2)), 0.9, 1.0)
    assert np.allclose(transition_under_policy(mdp, np.full((4, 2), 0.5)), 0.25)


def test_transition_matches_triple_loop(rng):
    mdp = random_mdp(3, 3, 2)
    probs = policy_from_params(rng.normal(size=(3, 2))).probs
    brute = np.zeros((3, 3))
    for s in range(3):
        for a in range(2):
            for t in range(3):
                brute[s, t] += probs[s, a] * mdp.transition[s, a, t]
    p_pi = transition_under_policy(mdp, probs)
    assert np.allclose(p_pi, brute, atol=1e-15)
    assert np.allclose(p_pi.sum(axis=1), 1.0, atol=1e-12)


def test_transition_shape_error():
    with pytest.raises(ValueError):
        transition_under_policy(random_mdp(0, 3, 2), np.full((3, 3), 1 / 3))


def test_occupancy_single_state():
    mdp = random_mdp(0, 1, 2)
    assert np.allclose(discounted_state_distribution(mdp, np.full((1, 2), 0.5), [1.0]), [1.0])


def test_occupancy_gamma_zero_is_initial():
    mdp = random_mdp(1, 4, 2, gamma=0.0)
    u = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(discounted_state_distribution(mdp, np.full((4, 2), 0.5), u), u)


def test_occupancy_matches_neumann(rng):
    mdp = random_mdp(7, 4, 3, gamma=0.9)
    probs = policy_from_params(rng.normal(size=(4, 3))).probs
    u = rng.dirichlet(np.ones(4))
    d = discounted_state_distribution(mdp, probs, u)
    assert np.allclose(d, neumann_occupancy(mdp, probs, u), atol=1e-12)


def test_visitation_row_sum():
    mdp = random_mdp(2, 5, 3, gamma=0.95)
    probs = PolicyTable.uniform(5, 3).probs
    assert np.allclose(accumulated_visitation_apply(mdp, probs, np.ones(5)), 1 / 0.05, atol=1e-10)
    assert np.array_equal(accumulated_visitation_apply(mdp, probs, np.zeros(5)), np.zeros(5))


def test_visitation_matches_neumann(rng):
    mdp = random_mdp(4, 4, 2, gamma=0.8)
    probs = policy_from_params(rng.normal(size=(4, 2))).probs
    v = rng.normal(size=4)
    assert np.allclose(accumulated_visitation_apply(mdp, probs, v), neumann_apply(mdp, probs, v),
                       atol=1e-10)


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 4),
       st.floats(0.0, 0.99))
def test_occupancy_properties(seed, n_s, n_a, gamma):
    mdp = random_mdp(seed, n_s, n_a, gamma=gamma)
    rng = np.random.default_rng(seed)
    probs = policy_from_params(rng.normal(scale=3, size=(n_s, n_a))).probs
    u = rng.dirichlet(np.ones(n_s))
    d = discounted_state_distribution(mdp, probs, u)
    assert np.all(d >= 0)
    assert abs(d.sum() - 1) <= 1e-10
    assert np.all(d >= (1 - gamma) * u - 1e-12)

    v, w = rng.normal(size=n_s), rng.normal(size=n_s)
    alpha = float(rng.normal())
    lhs = accumulated_visitation_apply(mdp, probs, alpha * v + w)
    rhs = alpha * accumulated_visitation_apply(mdp, probs, v) + accumulated_visitation_apply(mdp, probs, w)
    assert np.allclose(lhs, rhs, atol=1e-10)
    mv = accumulated_visitation_apply(mdp, probs, v)
    residual = mv - gamma * transition_under_policy(mdp, probs) @ mv
    assert np.allclose(residual, v, atol=1e-10)


def test_random_mdp_deterministic_and_valid():
    a, b = random_mdp(5, 3, 2), random_mdp(5, 3, 2)
    assert np.array_equal(a.transition, b.transition)
    assert np.array_equal(a.reward, b.reward)
    assert validate_mdp(a) == []


def test_random_mdp_strictly_positive():
    mdp = random_mdp(1, 3, 2)
    assert mdp.transition.min() > 0
    assert mdp.transition.min() >= 1e-3 / 3 / (1 + 1e-3) - 1e-15


def test_random_mdp_rejects_empty():
    with pytest.raises(ValueError):
        random_mdp(0, 0, 2)


def test_arrays_read_only():
    mdp = random_mdp(0, 2, 2)
    with pytest.raises(ValueError):
        mdp.reward[0, 0] = 5.0


def test_json_round_trip(tmp_path):
    mdp = random_mdp(9, 3, 2, r_max=2.0, gamma=0.7)
    path = tmp_path / "m.json"
    save_mdp(mdp, path)
    back = load_mdp(path)
    assert np.array_equal(back.transition, mdp.transition)
    assert np.array_equal(back.reward, mdp.reward)
    assert back.gamma == 0.7 and back.r_max == 2.0


def test_loader_rejects_invalid(tmp_path):
    data = random_mdp(0, 2, 2).to_dict()
    data["transition"][1][0] = [0.3, 0.3]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(InvalidMdpError) as err:
        load_mdp(path)
    assert any("(s=1,a=0)" in v for v in err.value.violations)


def test_loader_checks_declared_sizes():
    data = random_mdp(0, 2, 2).to_dict()
    data["num_states"] = 3
    with pytest.raises(InvalidMdpError):
        mdp_from_dict(data)
    del data["reward"]
    with pytest.raises(InvalidMdpError):
        mdp_from_dict(data)


def test_uniform_distribution():
    assert np.allclose(uniform_distribution(4), 0.25)
