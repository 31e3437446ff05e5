import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from wergodic import io
from wergodic.errors import BadDiffusion, BadGrid, BadParameter, CapExceeded
from wergodic.kernels import (
    PathSegment,
    ar1_kernel,
    default_diffusion,
    delay_sde_kernel,
    dyadic_exact_marginal,
    dyadic_kernel,
    finite_kernel,
    marginal_sample,
    propagate,
    simulate,
    trajectory_noise,
)
from wergodic.measures import DiscreteMeasure

SWAP = [[0.0, 1.0], [1.0, 0.0]]
TWO = [[0.7, 0.3], [0.6, 0.4]]


def zero_diffusion(u):
    return np.zeros_like(u)


# -- dyadic ------------------------------------------------------------------

@pytest.mark.parametrize("x, z, expected", [(0.0, 0.0, 0.0), (1.0, 0.5, 1.0), (0.5, 0.0, 0.25)])
def test_dyadic_step(x, z, expected):
    assert dyadic_kernel().step(x, z) == expected


def brute_force_marginal(x, n):
    # every branch sequence, composed step by step
    law = {}
    for bits in product([0.0, 0.5], repeat=n):
        y = Fraction(x)
        for z in bits:
            y = y / 2 + Fraction(z)
        law[y] = law.get(y, 0) + Fraction(1, 2**n)
    return law


@pytest.mark.parametrize("x", [0.0, 0.375, 1.0])
@pytest.mark.parametrize("n", [0, 1, 2, 5, 8])
def test_dyadic_exact_marginal_matches_enumeration(x, n):
    law = brute_force_marginal(x, n)
    mu = dyadic_exact_marginal(x, n)
    assert sorted(Fraction(a) for a in mu.atoms) == sorted(law)
    assert all(w == 2.0**-n for w in mu.weights)


def test_dyadic_small_marginals():
    assert dyadic_exact_marginal(0.0, 1).atoms.tolist() == [0.0, 0.5]
    assert dyadic_exact_marginal(0.0, 2).atoms.tolist() == [0.0, 0.25, 0.5, 0.75]
    assert dyadic_exact_marginal(0.37, 0).atoms.tolist() == [0.37]


def test_dyadic_marginal_cap():
    with pytest.raises(CapExceeded):
        dyadic_exact_marginal(0.0, 31)


def test_dyadic_samples_stay_on_exact_support():
    k = dyadic_kernel()
    x = 0.375
    for n in (1, 7, 20):
        states, _ = propagate(k, x, 500, seed=4, state_steps=[n])
        scaled = [Fraction(float(s)) * 2**n - Fraction(x) for s in states[n]]
        assert all(v.denominator == 1 and 0 <= v < 2**n for v in scaled)


def test_simulate_unrolls_recursion():
    k = dyadic_kernel()
    traj = simulate(k, 0.3, 3, seed=17)
    z = trajectory_noise(k, 17, 0, 3)
    x = 0.3
    expected = [x]
    for zi in z:
        x = 0.5 * x + zi
        expected.append(x)
    assert traj.states.tolist() == expected
    assert traj.times.tolist() == [0.0, 1.0, 2.0, 3.0]


def test_simulate_horizon_zero():
    assert simulate(dyadic_kernel(), 0.6, 0, seed=1).states.tolist() == [0.6]


# -- finite chains -----------------------------------------------------------

def test_identity_chain_is_constant():
    k = finite_kernel(np.eye(3))
    assert simulate(k, 2, 10, seed=0).states.tolist() == [2] * 11
    assert k.pushforward(1, 7).atoms.tolist() == [1]


def test_swap_chain():
    k = finite_kernel(SWAP)
    assert k.pushforward(0, 1).atoms.tolist() == [1]
    assert simulate(k, 0, 4, seed=3).states.tolist() == [0, 1, 0, 1, 0]


def test_finite_row():
    mu = finite_kernel(TWO).pushforward(0, 1)
    assert np.allclose(mu.weights, [0.7, 0.3], atol=1e-15)


def test_finite_sampling_frequencies():
    k = finite_kernel(TWO)
    n = 40000
    emp = marginal_sample(k, 0, 3, n, seed=9)
    row = k.pushforward(0, 3).weights
    freq = np.bincount(emp.samples, minlength=2) / n
    se = np.sqrt(row * (1 - row) / n)
    assert np.all(np.abs(freq - row) <= 3 * se)


def test_marginal_sample_at_time_zero():
    emp = marginal_sample(dyadic_kernel(), 0.25, 0, 10, seed=0)
    assert emp.samples.tolist() == [0.25] * 10


def test_initial_distribution_sampling():
    init = DiscreteMeasure([0, 1], [0.25, 0.75])
    emp = marginal_sample(finite_kernel(np.eye(2)), init, 0, 20000, seed=2)
    assert abs(emp.samples.mean() - 0.75) < 3 * math.sqrt(0.75 * 0.25 / 20000)


# -- reproducibility ---------------------------------------------------------

def test_seed_determinism():
    k = dyadic_kernel()
    a = marginal_sample(k, 0.1, 10, 3000, seed=5).samples
    b = marginal_sample(k, 0.1, 10, 3000, seed=5).samples
    c = marginal_sample(k, 0.1, 10, 3000, seed=6).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_worker_count_does_not_change_results():
    k = ar1_kernel(0.5, 1.0)
    a, _ = propagate(k, 0.0, 5000, seed=8, state_steps=[7], workers=1)
    b, _ = propagate(k, 0.0, 5000, seed=8, state_steps=[7], workers=4)
    assert np.array_equal(a[7], b[7])


def test_worker_count_from_environment(monkeypatch):
    k = dyadic_kernel()
    base = marginal_sample(k, 0.0, 6, 3000, seed=1).samples
    monkeypatch.setenv("WERGODIC_WORKERS", "3")
    assert np.array_equal(marginal_sample(k, 0.0, 6, 3000, seed=1).samples, base)


def test_trajectory_depends_only_on_index():
    k = ar1_kernel(0.8, 0.3)
    small = marginal_sample(k, 1.0, 5, 10, seed=12).samples
    large = marginal_sample(k, 1.0, 5, 2500, seed=12).samples
    assert np.array_equal(small, large[:10])


def test_synchronous_noise_is_state_independent():
    k = ar1_kernel(0.5, 1.0)
    a = simulate(k, 0.0, 5, seed=3).states
    b = simulate(k, 2.0, 5, seed=3).states
    assert np.allclose(b - a, 2.0 * 0.5 ** np.arange(6), atol=1e-12)


# -- AR(1) -------------------------------------------------------------------

def test_ar1_parameter_checks():
    for rho, sigma in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)]:
        with pytest.raises(BadParameter):
            ar1_kernel(rho, sigma)


def test_ar1_small_noise_step():
    assert ar1_kernel(0.5, 1e-12).step(1.0, 0.3) == pytest.approx(0.5, abs=1e-11)


def test_ar1_stationary_variance():
    k = ar1_kernel(0.5, 1.0)
    assert k.params["stationary_var"] == pytest.approx(4 / 3)
    emp = marginal_sample(k, 0.0, 50, 40000, seed=21).samples
    assert emp.var() == pytest.approx(4 / 3, rel=0.03)


def test_ar1_marginal_approaches_stationary_law():
    k = ar1_kernel(0.5, 1.0)
    rng = np.random.default_rng(0)
    gaps = []
    for n in (200, 20000):
        emp = marginal_sample(k, 0.0, 50, n, seed=22).samples
        direct = DiscreteMeasure.uniform(np.sqrt(4 / 3) * rng.standard_normal(n))
        # untruncated 1-d W1 of equal-size samples bounds the 1 ∧ |x - y| distance
        gaps.append(float(np.mean(np.abs(np.sort(emp) - direct.atoms))))
    assert gaps[1] < gaps[0]
    assert gaps[1] < 0.05


# -- delay equation ----------------------------------------------------------

@pytest.mark.parametrize("dt", [1 / 32, 1 / 64])
def test_delay_zero_diffusion_decays_like_exponential(dt):
    k = delay_sde_kernel(zero_diffusion, dt, check=False)
    traj = simulate(k, PathSegment.constant(1.0, dt), 1.0, seed=0)
    assert abs(traj.states[-1][-1] - math.exp(-1)) <= 2 * dt


def test_delay_determinism_and_coupling():
    k = delay_sde_kernel()
    x0 = PathSegment.from_function(np.sin, k.dt)
    a = simulate(k, x0, 2.0, seed=4).states
    b = simulate(k, x0, 2.0, seed=4).states
    assert np.array_equal(a, b)
    assert np.all(k.space.dist(a, b) == 0.0)


def test_delay_step_is_bounded():
    k = delay_sde_kernel()
    dt = k.dt
    x = PathSegment.from_function(lambda s: 3 * s, dt).values
    rng = np.random.default_rng(1)
    for _ in range(200):
        z = rng.standard_normal()
        y = k.step(x, z)
        v = x[-1]
        assert abs(y[-1] - v) <= abs(v) * dt + 1.5 * math.sqrt(dt) * abs(z) + 1e-12
        assert np.array_equal(y[:-1], x[1:])
        x = y


def test_path_segment_grid_checks():
    with pytest.raises(BadGrid):
        PathSegment(np.zeros(10), 1 / 64)
    with pytest.raises(BadGrid):
        PathSegment.constant(0.0, 0.3)
    with pytest.raises(BadGrid):
        delay_sde_kernel(dt=0.3)


def test_diffusion_checks():
    assert default_diffusion(np.array([0.0]))[0] == 1.0
    with pytest.raises(BadDiffusion):
        delay_sde_kernel(lambda u: -np.ones_like(u))
    with pytest.raises(BadDiffusion):
        delay_sde_kernel(lambda u: 2 - np.tanh(u))


def test_horizon_must_fit_the_mesh():
    with pytest.raises(BadParameter):
        delay_sde_kernel().steps_for(0.3)


# -- trajectory csv ----------------------------------------------------------

def test_trajectory_csv_round_trip(tmp_path):
    traj = simulate(dyadic_kernel(), 0.2, 5, seed=3)
    io.write_trajectory(traj, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().startswith("t,x0\n")
    back = io.read_trajectory(tmp_path / "t.csv")
    assert np.array_equal(back.states, traj.states)
