import numpy as np
import pytest

from mocha_attention import oracles


def test_finite_difference_of_sum_is_ones():
    np.testing.assert_allclose(oracles.finite_difference_gradient(np.sum, [0.3, -1.0, 2.0]), np.ones(3), atol=1e-9)


def test_finite_difference_of_squared_norm():
    grad = oracles.finite_difference_gradient(lambda x: float(x @ x), [1.0, 2.0])
    np.testing.assert_allclose(grad, [2.0, 4.0], atol=1e-9)


def test_recursive_alpha_hand_example():
    # stop probability 1/2 everywhere, all mass starting at the front
    alpha = oracles.monotonic_alpha_recursive([0.5, 0.5, 0.5], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(alpha, [0.5, 0.25, 0.125], rtol=0, atol=1e-15)


def test_recursive_alpha_certain_stop():
    alpha = oracles.monotonic_alpha_recursive([0.0, 1.0, 1.0], [1.0, 0.0, 0.0])
    assert alpha.tolist() == [0.0, 1.0, 0.0]


def test_mocha_oracle_width_one_returns_alpha():
    alpha = np.array([0.1, 0.6, 0.2])
    np.testing.assert_allclose(oracles.mocha_beta_bruteforce(alpha, [3.0, -1.0, 0.5], 1), alpha, atol=1e-15)


def test_mocha_oracle_full_width_is_prefix_softmax_mixture():
    rng = np.random.default_rng(0)
    alpha, u = rng.dirichlet(np.ones(5)), rng.normal(size=5)
    expected = np.zeros(5)
    for k in range(5):
        expected[:k + 1] += alpha[k] * np.exp(u[:k + 1]) / np.exp(u[:k + 1]).sum()
    np.testing.assert_allclose(oracles.mocha_beta_bruteforce(alpha, u, 5), expected, atol=1e-14)


def test_matcha_oracle_certain_first_stop():
    beta = oracles.matcha_beta_bruteforce([1.0, 0.0], [1.0, 0.3], [0.0, 5.0])
    np.testing.assert_allclose(beta, [1.0, 0.0], atol=1e-15)


def test_matcha_oracle_rejects_long_rows():
    with pytest.raises(ValueError):
        oracles.matcha_beta_bruteforce(np.ones(40), np.full(40, 0.5), np.zeros(40))
