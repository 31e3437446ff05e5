from itertools import product

import numpy as np
import pytest

from wergodic import io
from wergodic.errors import CapExceeded, NonUniqueStationary, NotStochastic
from wergodic.oracle import (
    FiniteChain,
    enumerate_time_averages,
    exact_lp_error,
    exact_marginal_w1,
    exact_second_moment,
    matrix_power_marginal,
    stationary_distribution,
    stationary_vector,
    transition_row,
)

TWO = FiniteChain([[0.7, 0.3], [0.6, 0.4]])
SWAP = FiniteChain([[0.0, 1.0], [1.0, 0.0]])
F = np.array([0.0, 1.0])


def three_state():
    P = np.array([[0.5, 0.25, 0.25], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]])
    D = np.array([[0, 0.5, 1.0], [0.5, 0, 0.5], [1.0, 0.5, 0]])
    return FiniteChain(P, ("a", "b", "c"), D)


def test_chain_validation():
    with pytest.raises(NotStochastic):
        FiniteChain([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(NotStochastic):
        FiniteChain([[1.5, -0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        FiniteChain([[1.0, 0.0], [0.0, 1.0]], dist=[[0, 2], [2, 0]])


def test_matrix_power_examples():
    assert matrix_power_marginal(TWO, 0, 0).atoms.tolist() == [0]
    assert matrix_power_marginal(SWAP, 0, 2).atoms.tolist() == [0]
    mu = matrix_power_marginal(TWO, 0, 2)
    assert np.allclose(mu.weights, [0.67, 0.33], atol=1e-15)


def test_chapman_kolmogorov():
    chain = three_state()
    for n in range(11):
        for m in range(11 - n):
            lhs = transition_row(chain, 1, n + m)
            rhs = transition_row(chain, 1, n) @ np.linalg.matrix_power(chain.P, m)
            assert np.abs(lhs - rhs).max() <= 1e-12


def test_stationary_examples():
    assert np.allclose(stationary_vector(SWAP), [0.5, 0.5], atol=1e-12)
    assert np.allclose(stationary_vector(TWO), [2 / 3, 1 / 3], atol=1e-12)
    with pytest.raises(NonUniqueStationary):
        stationary_distribution(FiniteChain(np.eye(2)))


def test_stationary_is_fixed_point():
    chain = three_state()
    pi = stationary_vector(chain)
    for n in range(1, 11):
        assert np.abs(pi @ np.linalg.matrix_power(chain.P, n) - pi).max() <= 1e-12


def brute_force_moments(chain, x, f, t, p, pi_f):
    # independent DFS over every path M_0 = x, ..., M_{t-1}
    lp, second = 0.0, 0.0
    for tail in product(range(chain.k), repeat=t - 1):
        path = (x, *tail)
        prob = np.prod([chain.P[a, b] for a, b in zip(path, path[1:])])
        avg = np.mean(f[list(path)])
        lp += prob * abs(avg - pi_f) ** p
        second += prob * avg**2
    return lp ** (1 / p), second - pi_f**2


@pytest.mark.parametrize("t", [1, 2, 3, 6])
@pytest.mark.parametrize("p", [1, 2, 3.5])
def test_enumeration_matches_brute_force(t, p):
    chain = three_state()
    f = np.array([0.2, -0.4, 1.0])
    pi_f = float(stationary_vector(chain) @ f)
    lp, second = brute_force_moments(chain, 2, f, t, p, pi_f)
    assert exact_lp_error(chain, 2, f, p, t) == pytest.approx(lp, abs=1e-12)
    assert exact_second_moment(chain, 2, f, t) == pytest.approx(second, abs=1e-12)


def test_enumeration_probabilities_sum_to_one():
    prob, avg = enumerate_time_averages(TWO, 0, F, 10)
    assert prob.sum() == pytest.approx(1.0, abs=1e-12)
    assert avg.min() >= 0.0 and avg.max() <= 1.0


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        enumerate_time_averages(three_state(), 0, np.zeros(3), 20)


def test_constant_function_has_no_error():
    for t in (1, 4, 9):
        assert exact_lp_error(TWO, 0, [2.0, 2.0], 1, t) == pytest.approx(0.0, abs=1e-14)
        assert exact_lp_error(TWO, 1, [2.0, 2.0], 2, t) == pytest.approx(0.0, abs=1e-14)
        assert exact_second_moment(TWO, 0, [2.0, 2.0], t) == pytest.approx(0.0, abs=1e-13)


def test_one_step_second_moment():
    # started one step later, the t=1 average is f(M_1)
    pi_f = 1 / 3
    expected = float(TWO.P[0] @ F**2) - pi_f**2
    shifted = sum(TWO.P[0, y] * exact_second_moment(TWO, y, F, 1) for y in range(2))
    assert shifted == pytest.approx(expected, abs=1e-15)
    assert exact_second_moment(TWO, 0, F, 1) == pytest.approx(-pi_f**2, abs=1e-15)


def test_second_moment_and_lp_share_enumeration():
    # E[A^2] - pi^2 = E[(A - pi)^2] + 2 pi (E[A] - pi)
    pi_f = 1 / 3
    for t in (2, 5, 8):
        prob, avg = enumerate_time_averages(TWO, 0, F, t)
        mean = float(prob @ avg)
        lp2 = exact_lp_error(TWO, 0, F, 2, t)
        assert exact_second_moment(TWO, 0, F, t) == pytest.approx(
            lp2**2 + 2 * pi_f * (mean - pi_f), abs=1e-14)


def test_lp_error_decreases_on_acceptance_instance():
    vals = [exact_lp_error(TWO, 0, F, p, t) for p in (2,) for t in range(1, 13)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_exact_marginal_w1():
    # discrete metric: W1 equals TV against (2/3, 1/3)
    assert exact_marginal_w1(TWO, 0, 0) == pytest.approx(1 / 3, abs=1e-15)
    assert exact_marginal_w1(TWO, 0, 1) == pytest.approx(0.7 - 2 / 3, abs=1e-15)


def test_chain_csv(tmp_path):
    chain = three_state()
    io.save_chain(chain, tmp_path / "c.csv")
    back = io.load_chain(tmp_path / "c.csv")
    assert np.array_equal(back.P, chain.P) and np.array_equal(back.dist, chain.dist)


def test_chain_csv_rejects_bad_shape(tmp_path):
    (tmp_path / "bad.csv").write_text("# header\n0.5,0.5\n0.5,0.5\n0,1\n")
    with pytest.raises(ValueError):
        io.load_chain(tmp_path / "bad.csv")
