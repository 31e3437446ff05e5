"""Estimators for the ergodic behaviour of a kernel.

Monte Carlo estimators return an :class:`Estimate` (value, 95% half-width,
sample count) or a :class:`ConvergenceCurve` of such triples indexed by time.
Half-widths use the normal approximation; for Wasserstein functionals of an
empirical measure the standard deviation comes from a seeded bootstrap.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import streams
from .errors import (
    BadExponent,
    BadParameter,
    BudgetExceeded,
    DegeneratePair,
    EmptyTrajectory,
    NonPositiveValue,
)
from .kernels import Starts, _as_state, propagate
from .measures import (
    DiscreteMeasure,
    EmpiricalMeasure,
    as_discrete,
    w1_1d_rows,
    wasserstein,
)

Z95 = 1.959963984540054
DEFAULT_BUDGET = 10**8
INNER_CHUNK = 64


# -- data types -------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A bounded Lipschitz observable with declared bounds."""

    __test__ = False  # keep pytest from collecting this class

    evaluator: Callable
    lipschitz: float
    sup: float
    name: str = "f"

    def __call__(self, x):
        return np.asarray(self.evaluator(x), dtype=float)


class Estimate(NamedTuple):
    value: float
    half_width: float
    n: int


@dataclass(frozen=True)
class ConvergenceCurve:
    t: np.ndarray
    value: np.ndarray
    half_width: np.ndarray
    n: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arrays = [np.atleast_1d(np.asarray(a, dtype=float)) for a in
                  (self.t, self.value, self.half_width)]
        n = np.atleast_1d(np.asarray(self.n, dtype=int))
        if len({len(a) for a in arrays} | {len(n)}) != 1:
            raise ValueError("curve columns differ in length")
        if np.any(np.diff(arrays[0]) <= 0):
            raise ValueError("curve times must be strictly increasing")
        if np.any(arrays[2] < 0):
            raise ValueError("half-widths must be nonnegative")
        for name, a in zip(("t", "value", "half_width", "n"), (*arrays, n)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def from_estimates(cls, times, estimates, **meta):
        return cls(
            list(times),
            [e.value for e in estimates],
            [e.half_width for e in estimates],
            [e.n for e in estimates],
            meta,
        )

    def __len__(self):
        return len(self.t)

    def entries(self):
        return list(zip(self.t.tolist(), self.value.tolist(),
                        self.half_width.tolist(), self.n.tolist()))

    def window(self, lo=None, hi=None):
        keep = np.ones(len(self.t), dtype=bool)
        if lo is not None:
            keep &= self.t >= lo
        if hi is not None:
            keep &= self.t <= hi
        return ConvergenceCurve(self.t[keep], self.value[keep], self.half_width[keep],
                                self.n[keep], dict(self.meta))


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``value ≈ C exp(-c t)``."""

    C: float
    c: float
    residual: float
    window: tuple


def mean_estimate(values):
    values = np.asarray(values, dtype=float)
    n = len(values)
    sd = values.std(ddof=1) if n > 1 else 0.0
    return Estimate(float(values.mean()), float(Z95 * sd / np.sqrt(n)), n)


# -- test functions ---------------------------------------------------------

def constant(c):
    return TestFunction(lambda x: np.full(np.shape(x)[:1] or (), float(c)), 0.0, abs(c), f"const({c})")


def identity():
    return TestFunction(lambda x: x, 1.0, 1.0, "x")


def square():
    return TestFunction(lambda x: x**2, 2.0, 1.0, "x^2")


def cos_pi():
    return TestFunction(lambda x: np.cos(np.pi * x), np.pi, 1.0, "cos(pi x)")


def state_values(values, space):
    """Function on a finite state space given by its value at each state index."""
    v = np.asarray(values, dtype=float)
    k = len(v)
    D = space.pairwise(np.arange(k), np.arange(k))
    off = ~np.eye(k, dtype=bool)
    lip = float(np.max(np.abs(v[:, None] - v[None, :])[off] / D[off])) if k > 1 else 0.0
    return TestFunction(lambda i: v[i], lip, float(np.abs(v).max()), "values")


def tanh_point():
    """``tanh(x)`` on the line under ``1 ∧ |x - y|``."""
    return TestFunction(np.tanh, 2.0, 1.0, "tanh(x)")


def tanh_endpoint(delta=1.0):
    """``tanh`` of the right endpoint of a path segment, for the sup-norm metric."""
    return TestFunction(lambda x: np.tanh(np.asarray(x)[..., -1]), max(2.0, delta), 1.0,
                        "tanh(x(0))")


# -- time averages ----------------------------------------------------------

def time_average(traj, f):
    """Birkhoff average of ``f`` along a stored trajectory.

    Discrete time: mean over every stored state.  Continuous time:
    left-endpoint Riemann sum over ``[0, horizon)`` divided by the horizon.
    """
    if traj is None or len(traj) == 0:
        raise EmptyTrajectory("cannot average over an empty trajectory")
    values = f(traj.states)
    if traj.continuous and len(traj) > 1:
        values = values[:-1]
    return float(np.mean(values))


def birkhoff_averages(kernel, init, f, t_grid, n, seed, workers=None):
    """Per-trajectory time averages ``A_t f`` over ``[0, t)`` for each ``t``.

    Returns an array of shape ``(len(t_grid), n)``.  All times share the same
    trajectories.
    """
    steps = [kernel.steps_for(t) for t in t_grid]
    if min(steps) < 1:
        raise BadParameter("time averages need t of at least one step")
    _, sums = propagate(kernel, init, n, seed, f=f, sum_steps=steps, workers=workers)
    return np.stack([sums[k] / k for k in steps])


def lp_from_averages(averages, pi_ref, p):
    """``(mean |A - pi_ref|^p)^(1/p)`` with a delta-method half-width."""
    if p < 1:
        raise BadExponent(f"p must be at least 1, got {p}")
    dev = np.abs(np.asarray(averages, dtype=float) - pi_ref) ** p
    m = mean_estimate(dev)
    value = max(m.value, 0.0) ** (1.0 / p)
    if m.value > 0:
        hw = m.half_width * m.value ** (1.0 / p - 1.0) / p
    else:
        hw = 0.0
    return Estimate(float(value), float(hw), m.n)


def lp_error(kernel, init, f, p, t, pi_ref, n_traj, seed, workers=None):
    """Monte Carlo ``(E |A_t f - pi(f)|^p)^(1/p)``."""
    if p < 1:
        raise BadExponent(f"p must be at least 1, got {p}")
    if n_traj < 2:
        raise BadParameter("lp_error needs at least two trajectories")
    avg = birkhoff_averages(kernel, init, f, [t], n_traj, seed, workers)[0]
    return lp_from_averages(avg, pi_ref, p)


def lp_error_curve(kernel, init, f, p, t_grid, pi_ref, n_traj, seed, workers=None):
    if p < 1:
        raise BadExponent(f"p must be at least 1, got {p}")
    avgs = birkhoff_averages(kernel, init, f, t_grid, n_traj, seed, workers)
    return ConvergenceCurve.from_estimates(
        t_grid, [lp_from_averages(a, pi_ref, p) for a in avgs],
        estimator="lp_error", p=p, t_grid=list(t_grid),
    )


def second_moment_gap(kernel, x, f, pi_ref, t, n, seed, workers=None):
    """Monte Carlo ``E^x[(A_t f)^2] - pi(f)^2``."""
    avg = birkhoff_averages(kernel, x, f, [t], n, seed, workers)[0]
    m = mean_estimate(avg**2)
    return Estimate(m.value - pi_ref**2, m.half_width, m.n)


def second_moment_curve(kernel, x, f, pi_ref, t_grid, n, seed, workers=None):
    avgs = birkhoff_averages(kernel, x, f, t_grid, n, seed, workers)
    ests = []
    for a in avgs:
        m = mean_estimate(a**2)
        ests.append(Estimate(m.value - pi_ref**2, m.half_width, m.n))
    return ConvergenceCurve.from_estimates(t_grid, ests, estimator="second_moment",
                                           t_grid=list(t_grid))


# -- Wasserstein functionals --------------------------------------------------

def _w1_samples(samples, ref, space):
    if space.interval is not None and samples.ndim == 1:
        return float(w1_1d_rows(samples[None], ref)[0])
    ref = as_discrete(ref)
    if len(ref.weights) == len(samples) and np.ptp(ref.weights) <= 1e-12 / len(samples):
        # n equal-weight samples against n equal atoms: an assignment problem
        C = space.pairwise(samples, ref.atoms)
        r, c = linear_sum_assignment(C)
        return float(C[r, c].mean())
    return wasserstein(EmpiricalMeasure(samples), ref, space)


def _bootstrap_sd(samples, ref, space, n_boot, seed):
    if n_boot < 2:
        return 0.0
    rng = streams.generator(seed, streams.BOOTSTRAP)
    idx = rng.integers(0, len(samples), size=(n_boot, len(samples)))
    if space.interval is not None and samples.ndim == 1:
        vals = w1_1d_rows(samples[idx], ref)
    else:
        vals = np.array([_w1_samples(samples[i], ref, space) for i in idx])
    return float(np.std(vals, ddof=1))


def marginal_convergence(kernel, x, pi_hat, t_grid, n, seed, exact=False, n_boot=32,
                         workers=None):
    """Curve of ``W1(p^t(x, .), pi_hat)`` over ``t_grid``.

    With ``exact`` and an exact pushforward the marginal is used directly
    (half-width 0); otherwise ``n`` simulated final states stand in for it.
    """
    space = kernel.space
    t_grid = list(t_grid)
    if exact and kernel.has_exact:
        ests = [Estimate(wasserstein(kernel.pushforward(x, kernel.steps_for(t)), pi_hat, space),
                         0.0, 0) for t in t_grid]
        return ConvergenceCurve.from_estimates(t_grid, ests, estimator="marginal_convergence",
                                               exact=True, t_grid=t_grid)
    steps = [kernel.steps_for(t) for t in t_grid]
    states, _ = propagate(kernel, x, n, seed, state_steps=steps, workers=workers)
    ests = []
    for i, k in enumerate(steps):
        sample = states[k]
        value = _w1_samples(sample, pi_hat, space)
        sd = _bootstrap_sd(sample, pi_hat, space, n_boot, streams.child_seed(seed, i))
        ests.append(Estimate(value, Z95 * sd, n))
    return ConvergenceCurve.from_estimates(t_grid, ests, estimator="marginal_convergence",
                                           exact=False, t_grid=t_grid, n_boot=n_boot)


def _rows_to_reference(rows, pi_hat, space):
    if space.interval is not None and rows.ndim == 2:
        return w1_1d_rows(rows, pi_hat)
    return np.array([wasserstein(EmpiricalMeasure(r), pi_hat, space) for r in rows])


def uniform_condition_profile(kernel, x, pi_hat, t_grid, s_grid, n_outer, n_inner, seed,
                              budget=DEFAULT_BUDGET, workers=None):
    """Averaged distances ``E[W1(p^t(y, .), pi_hat)]`` with ``y ~ p^s(x, .)``.

    Returns ``{s: [Estimate for each t]}``.  The outer points for different
    ``s`` come from the same trajectories; the inner runs for each outer point
    are fresh.
    """
    t_grid = list(t_grid)
    s_grid = list(s_grid)
    cost = n_outer * n_inner * len(s_grid)
    if cost > budget:
        raise BudgetExceeded(f"{n_outer}*{n_inner}*{len(s_grid)} = {cost} exceeds budget {budget}")
    s_steps = [kernel.steps_for(s) for s in s_grid]
    t_steps = [kernel.steps_for(t) for t in t_grid]
    outer, _ = propagate(kernel, x, n_outer, streams.child_seed(seed, 0),
                         state_steps=s_steps, workers=workers)
    profile = {}
    for si, (s, ks) in enumerate(zip(s_grid, s_steps)):
        ys = outer[ks]
        dists = np.empty((len(t_steps), n_outer))
        for c0 in range(0, n_outer, INNER_CHUNK):
            chunk = ys[c0:c0 + INNER_CHUNK]
            starts = Starts(np.repeat(chunk, n_inner, axis=0))
            inner, _ = propagate(kernel, starts, len(chunk) * n_inner,
                                 streams.child_seed(seed, 1, si, c0 // INNER_CHUNK),
                                 state_steps=t_steps, workers=workers)
            for ti, kt in enumerate(t_steps):
                rows = inner[kt].reshape((len(chunk), n_inner) + inner[kt].shape[1:])
                dists[ti, c0:c0 + len(chunk)] = _rows_to_reference(rows, pi_hat, kernel.space)
        profile[s] = [mean_estimate(d) for d in dists]
    return profile


def uniform_condition(kernel, x, pi_hat, t, s_grid, n_outer, n_inner, seed,
                      budget=DEFAULT_BUDGET, workers=None):
    """Sup over ``s_grid`` of the averaged distance at time ``t``."""
    profile = uniform_condition_profile(kernel, x, pi_hat, [t], s_grid, n_outer, n_inner,
                                        seed, budget, workers)
    return max((ests[0] for ests in profile.values()), key=lambda e: e.value)


def uniform_condition_curve(kernel, x, pi_hat, t_grid, s_grid, n_outer, n_inner, seed,
                            budget=DEFAULT_BUDGET, workers=None):
    profile = uniform_condition_profile(kernel, x, pi_hat, t_grid, s_grid, n_outer, n_inner,
                                        seed, budget, workers)
    ests = [max((profile[s][i] for s in profile), key=lambda e: e.value)
            for i in range(len(list(t_grid)))]
    return ConvergenceCurve.from_estimates(t_grid, ests, estimator="uniform_condition",
                                           t_grid=list(t_grid), s_grid=list(s_grid))


def self_distance_bias(pi_hat, space, n, seed, reps=16):
    """Mean W1 between two independent ``n``-samples of ``pi_hat``.

    Serves as the additive bias allowance for empirical Wasserstein
    estimates made with ``n`` samples.
    """
    pi_hat = as_discrete(pi_hat)
    rng = streams.generator(seed, streams.REFERENCE)
    vals = []
    for _ in range(reps):
        a = pi_hat.sample(rng, n)
        b = pi_hat.sample(rng, n)
        if space.interval is not None and a.ndim == 1:
            vals.append(float(np.mean(np.abs(np.sort(a) - np.sort(b)))))
        else:
            vals.append(wasserstein(EmpiricalMeasure(a), EmpiricalMeasure(b), space))
    return float(np.mean(vals))


def _law_at(kernel, x, t, n, seed, exact, workers=None):
    if exact and kernel.has_exact:
        return kernel.pushforward(x, kernel.steps_for(t))
    steps = kernel.steps_for(t)
    states, _ = propagate(kernel, x, n, seed, state_steps=[steps], workers=workers)
    return EmpiricalMeasure(states[steps])


def contraction_factor(kernel, x1, x2, t, n=2000, seed=0, exact=True, workers=None):
    """``W1(p^t(x1, .), p^t(x2, .)) / d(x1, x2)``.

    Monte Carlo runs drive both points with the same noise.
    """
    d = kernel.space.distance(_as_state(x1), _as_state(x2))
    if d == 0:
        raise DegeneratePair("contraction factor needs two distinct points")
    mu = _law_at(kernel, x1, t, n, seed, exact, workers)
    nu = _law_at(kernel, x2, t, n, seed, exact, workers)
    return wasserstein(mu, nu, kernel.space) / d


def transition_expectation(kernel, x, f, t, n=2000, seed=0, exact=True, workers=None):
    """``P_t f(x)``, exactly from the pushforward or as a Monte Carlo mean."""
    return _law_at(kernel, x, t, n, seed, exact, workers).expect(f)


def lipschitz_constant_estimate(kernel, f, t, pairs, n=2000, seed=0, exact=True,
                                workers=None):
    """Largest observed ``|P_t f(x) - P_t f(y)| / d(x, y)`` over ``pairs``.

    A lower bound on the Lipschitz constant of ``x -> P_t f(x)``.
    """
    pairs = list(pairs)
    if not pairs:
        raise BadParameter("need at least one pair")
    best = 0.0
    for x, y in pairs:
        d = kernel.space.distance(_as_state(x), _as_state(y))
        if d == 0:
            raise DegeneratePair("pairs must have positive distance")
        fx = transition_expectation(kernel, x, f, t, n, seed, exact, workers)
        fy = transition_expectation(kernel, y, f, t, n, seed, exact, workers)
        best = max(best, abs(fx - fy) / d)
    return best


def invariance_check(kernel, pi_hat, fns, t, n, seed, exact=False, workers=None):
    """Largest ``|pi_hat(P_t f) - pi_hat(f)|`` over ``fns``.

    The Monte Carlo version starts ``n`` runs from ``pi_hat``; the exact
    version pushes every atom of ``pi_hat`` forward.  The returned half-width
    belongs to the maximising function.
    """
    fns = list(fns)
    if not fns:
        raise BadParameter("need at least one test function")
    pi_hat = as_discrete(pi_hat)
    steps = kernel.steps_for(t)
    if steps == 0:
        return Estimate(0.0, 0.0, 0)
    if exact and kernel.has_exact:
        out = []
        for f in fns:
            moved = sum(w * kernel.pushforward(a, steps).expect(f)
                        for a, w in zip(pi_hat.atoms, pi_hat.weights))
            out.append(Estimate(abs(moved - pi_hat.expect(f)), 0.0, 0))
        return max(out, key=lambda e: e.value)
    states, _ = propagate(kernel, pi_hat, n, seed, state_steps=[steps], workers=workers)
    final = states[steps]
    out = []
    for f in fns:
        m = mean_estimate(f(final))
        out.append(Estimate(abs(m.value - pi_hat.expect(f)), m.half_width, m.n))
    return max(out, key=lambda e: e.value)


def synchronous_coupling_curve(kernel, x1, x2, t_grid, n, seed, workers=None):
    """Mean ``d(X_t, Y_t)`` for copies from ``x1`` and ``x2`` driven by shared noise.

    Each value bounds ``W1(p^t(x1, .), p^t(x2, .))`` from above.
    """
    t_grid = list(t_grid)
    steps = [kernel.steps_for(t) for t in t_grid]
    a, _ = propagate(kernel, x1, n, seed, state_steps=steps, workers=workers)
    b, _ = propagate(kernel, x2, n, seed, state_steps=steps, workers=workers)
    ests = [mean_estimate(kernel.space.dist(a[k], b[k])) for k in steps]
    return ConvergenceCurve.from_estimates(t_grid, ests, estimator="synchronous_coupling",
                                           t_grid=t_grid)


def cesaro_marginal(kernel, x, t):
    """Exact ``(1/t) sum_{s<t} p^s(x, .)`` for kernels with a pushforward."""
    if not kernel.has_exact:
        raise BadParameter(f"kernel {kernel.name!r} has no exact pushforward")
    t = kernel.steps_for(t)
    if t < 1:
        raise BadParameter("need t >= 1")
    parts = [kernel.pushforward(x, s) for s in range(t)]
    atoms = np.concatenate([p.atoms for p in parts])
    weights = np.concatenate([p.weights / t for p in parts])
    return DiscreteMeasure(atoms, weights)


def long_run_reference(kernel, x, t_burn, n, seed, workers=None):
    """Empirical law at a large burn-in time, a surrogate invariant measure."""
    return as_discrete(_law_at(kernel, x, t_burn, n, seed, False, workers))


# -- rate fitting ------------------------------------------------------------

def rate_fit(curve, window=None):
    """Fit ``log value = log C - c t`` by least squares on the windowed entries."""
    lo, hi = (None, None) if window is None else window
    sub = curve.window(lo, hi)
    if len(sub) < 3:
        raise BadParameter(f"rate fit needs at least 3 points in the window, got {len(sub)}")
    if np.any(sub.value <= 0):
        bad = sub.t[sub.value <= 0][0]
        raise NonPositiveValue(f"value at t={bad} is not positive; shrink the window")
    logv = np.log(sub.value)
    slope, intercept = np.polyfit(sub.t, logv, 1)
    resid = logv - (intercept + slope * sub.t)
    return RateFit(float(np.exp(intercept)), float(-slope),
                   float(np.sqrt(np.mean(resid**2))),
                   (float(sub.t[0]), float(sub.t[-1])))
