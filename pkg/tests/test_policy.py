import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ppo_fdiv.policy import (PolicyTable, load_theta, logits_from_policy, policy_from_params,
                             policy_jacobian, save_theta, score)

logit_rows = arrays(np.float64, st.integers(1, 6), elements=st.floats(-30, 30))


def test_zero_logits_uniform():
    assert np.allclose(policy_from_params(np.zeros((2, 4))).probs, 0.25)


def test_shift_invariance():
    base = np.array([[0.3, -1.2, 2.0]])
    assert np.allclose(policy_from_params(base).probs, policy_from_params(base + 17.5).probs)
    assert np.allclose(policy_from_params(np.full((1, 3), 7.0)).probs, 1 / 3)


def test_large_gap_log_probs_exact():
    pol = policy_from_params(np.array([[1000.0, 0.0]]))
    assert pol.log_probs[0, 1] == -1000.0
    assert pol.log_probs[0, 0] == 0.0
    assert pol.probs[0, 0] == 1.0
    assert np.isfinite(pol.log_probs).all()


def test_rejects_bad_logits():
    with pytest.raises(ValueError):
        policy_from_params(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        policy_from_params(np.zeros(3))


@given(logit_rows)
def test_rows_are_distributions(row):
    pol = policy_from_params(row[None, :])
    assert abs(pol.probs.sum() - 1) <= 1e-12
    assert np.all(pol.probs > 0) or row.max() - row.min() > 700
    finite = pol.probs > 1e-300
    assert np.allclose(np.exp(pol.log_probs[finite]), pol.probs[finite], rtol=1e-12)


def test_score_uniform_two_actions():
    assert np.allclose(score(np.zeros((1, 2)), 0, 0), [0.5, -0.5])


def test_score_expectation_zero(rng):
    theta = rng.normal(size=(2, 4))
    pi = policy_from_params(theta).probs[1]
    total = sum(pi[a] * score(theta, 1, a) for a in range(4))
    assert np.allclose(total, 0.0, atol=1e-15)


def test_score_matches_finite_difference(rng):
    theta = rng.normal(size=(3, 4))
    h = 1e-6
    for s, a in [(0, 1), (2, 3)]:
        fd = np.zeros(4)
        for j in range(4):
            e = np.zeros_like(theta)
            e[s, j] = h
            fd[j] = (policy_from_params(theta + e).log_probs[s, a]
                     - policy_from_params(theta - e).log_probs[s, a]) / (2 * h)
        assert np.allclose(fd, score(theta, s, a), rtol=1e-6, atol=1e-9)


def test_score_index_errors():
    with pytest.raises(IndexError):
        score(np.zeros((2, 2)), 2, 0)
    with pytest.raises(IndexError):
        score(np.zeros((2, 2)), 0, 5)


def test_jacobian_uniform_two_actions():
    assert np.allclose(policy_jacobian(np.zeros((1, 2)), 0), [[0.25, -0.25], [-0.25, 0.25]])


def test_jacobian_matches_finite_difference(rng):
    theta = rng.normal(size=(2, 3))
    h = 1e-6
    fd = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros_like(theta)
        e[1, j] = h
        fd[:, j] = (policy_from_params(theta + e).probs[1] - policy_from_params(theta - e).probs[1]) / (2 * h)
    assert np.allclose(fd, policy_jacobian(theta, 1), atol=1e-9)


@given(logit_rows.filter(lambda r: r.size >= 2))
def test_jacobian_properties(row):
    theta = row[None, :]
    h = policy_jacobian(theta, 0)
    assert np.allclose(h, h.T)
    assert np.allclose(h @ np.ones(row.size), 0.0, atol=1e-14)
    eig = np.linalg.eigvalsh(h)
    assert eig.min() >= -1e-14
    assert eig.max() <= 1.0


@given(logit_rows.filter(lambda r: r.size >= 2), st.data())
def test_lipschitz_bounds(row, data):
    theta = row[None, :]
    other = theta + data.draw(arrays(np.float64, row.size, elements=st.floats(-5, 5)))[None, :]
    a = data.draw(st.integers(0, row.size - 1))
    assert np.linalg.norm(score(theta, 0, a)) <= math.sqrt(2) + 1e-12
    grad = policy_jacobian(theta, 0)[a]
    grad_other = policy_jacobian(other, 0)[a]
    assert np.linalg.norm(grad - grad_other) <= 3 * np.linalg.norm(theta - other) + 1e-12


def test_near_deterministic_score_approaches_sqrt2():
    theta = np.array([[50.0, 0.0, 0.0]])
    assert np.linalg.norm(score(theta, 0, 1)) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_from_probs_and_logits():
    table = PolicyTable.from_probs([[1.0, 0.0]])
    assert table.log_probs[0, 1] == -np.inf
    with pytest.raises(ValueError):
        logits_from_policy(table)
    pol = policy_from_params(np.array([[0.2, -0.4]]))
    assert np.allclose(policy_from_params(logits_from_policy(pol)).probs, pol.probs)


def test_table_read_only():
    pol = PolicyTable.uniform(2, 2)
    assert pol.shape == (2, 2)
    with pytest.raises(ValueError):
        pol.probs[0, 0] = 1.0


def test_theta_json_round_trip(tmp_path, rng):
    theta = rng.normal(size=(3, 2))
    path = tmp_path / "theta.json"
    save_theta(theta, path)
    assert np.array_equal(load_theta(path), theta)
