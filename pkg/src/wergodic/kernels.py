"""Markov kernels and their simulation.

A :class:`Kernel` is split into a noise sampler and a pure update
``(states, noise) -> states`` acting on a batch of states.  Keeping the two
apart gives synchronous couplings for free: two runs with the same seed see
the same noise whatever their initial states.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import oracle, streams
from .errors import BadDiffusion, BadGrid, BadParameter, CapExceeded
from .measures import (
    DiscreteMeasure,
    EmpiricalMeasure,
    MetricSpace,
    interval_space,
    path_space,
    real_line,
)

DYADIC_CAP = 30


@dataclass(frozen=True)
class Kernel:
    name: str
    space: MetricSpace
    noise: Callable
    update: Callable
    dt: float = 1.0
    continuous: bool = False
    pushforward: Optional[Callable] = None
    params: dict = field(default_factory=dict, compare=False)

    def step(self, x, z):
        """One transition of a single state ``x`` driven by noise ``z``."""
        x = _as_state(x)
        return self.update(x[None], np.asarray(z)[None])[0]

    def steps_for(self, t):
        """Number of simulation steps needed to reach time ``t``."""
        if t < 0:
            raise BadParameter(f"time must be nonnegative, got {t}")
        k = t / self.dt
        n = int(round(k))
        if abs(k - n) > 1e-9 * max(1.0, k):
            raise BadParameter(f"time {t} is not a multiple of the step {self.dt}")
        return n

    @property
    def has_exact(self):
        return self.pushforward is not None


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    step: float = 1.0
    origin: object = None
    continuous: bool = False

    def __post_init__(self):
        if len(self.states) < 1:
            raise ValueError("a trajectory holds at least one state")
        if not self.step > 0:
            raise ValueError("trajectory step must be positive")

    def __len__(self):
        return len(self.states)

    @property
    def times(self):
        return np.arange(len(self.states)) * self.step


@dataclass(frozen=True)
class PathSegment:
    """Values on the uniform grid ``-1, -1 + mesh, ..., 0``."""

    values: np.ndarray
    mesh: float

    def __post_init__(self):
        m = _grid_nodes(self.mesh)
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or len(values) != m + 1:
            raise BadGrid(f"mesh {self.mesh} needs {m + 1} grid values, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, c, mesh):
        return cls(np.full(_grid_nodes(mesh) + 1, float(c)), mesh)

    @classmethod
    def from_function(cls, fn, mesh):
        m = _grid_nodes(mesh)
        return cls(np.asarray([fn(s) for s in np.linspace(-1.0, 0.0, m + 1)]), mesh)

    @property
    def right(self):
        return float(self.values[-1])


@dataclass(frozen=True)
class Starts:
    """Explicit initial state for each trajectory of a batch run."""

    states: np.ndarray


def _grid_nodes(mesh):
    if not mesh > 0:
        raise BadGrid("mesh must be positive")
    m = int(round(1.0 / mesh))
    if m < 1 or abs(m * mesh - 1.0) > 1e-12:
        raise BadGrid(f"mesh {mesh} does not divide 1")
    return m


def _as_state(x):
    if isinstance(x, PathSegment):
        return x.values
    return np.asarray(x)


# -- concrete kernels -------------------------------------------------------

def _dyadic_noise(rng, size):
    return 0.5 * rng.integers(0, 2, size=size)


def _dyadic_update(x, z):
    return 0.5 * x + z


def dyadic_exact_marginal(x, n):
    """Law of ``M_n`` from ``M_0 = x``: uniform on ``{(x + j) / 2^n : j < 2^n}``."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > DYADIC_CAP:
        raise CapExceeded(f"2**{n} atoms exceeds the cap 2**{DYADIC_CAP}")
    scale = 2.0**-n
    return DiscreteMeasure.uniform(float(x) * scale + np.arange(2**n) * scale)


def dyadic_kernel():
    """``x -> x/2 + X`` with ``X`` uniform on ``{0, 1/2}``, on ``[0, 1]``."""
    return Kernel(
        "dyadic", interval_space(0.0, 1.0), _dyadic_noise, _dyadic_update,
        pushforward=dyadic_exact_marginal,
    )


def finite_kernel(P, labels=None, dist=None):
    chain = P if isinstance(P, oracle.FiniteChain) else oracle.FiniteChain(P, labels, dist)
    cum = np.cumsum(chain.P, axis=1)
    cum[:, -1] = 1.0
    last = chain.k - 1

    def noise(rng, size):
        return rng.random(size)

    def update(x, u):
        nxt = (u[:, None] >= cum[x]).sum(axis=1)
        return np.minimum(nxt, last)

    def pushforward(x, n):
        return oracle.matrix_power_marginal(chain, x, n)

    return Kernel(
        "finite", chain.space, noise, update, pushforward=pushforward,
        params={"chain": chain},
    )


def ar1_kernel(rho, sigma):
    """Gaussian autoregression ``x -> rho x + sigma Z`` under ``1 ∧ |x - y|``."""
    if not 0 < rho < 1:
        raise BadParameter(f"rho must lie in (0, 1), got {rho}")
    if not sigma > 0:
        raise BadParameter(f"sigma must be positive, got {sigma}")

    def noise(rng, size):
        return rng.standard_normal(size)

    def update(x, z):
        return rho * x + sigma * z

    return Kernel(
        "ar1", real_line("min1"), noise, update,
        params={"rho": rho, "sigma": sigma, "stationary_var": sigma**2 / (1 - rho**2)},
    )


def default_diffusion(u):
    return 1.0 + 0.5 * np.tanh(u)


def check_diffusion(G, lo=-10.0, hi=10.0, n=2001, tol=1e-9):
    u = np.linspace(lo, hi, n)
    g = np.asarray(G(u), dtype=float)
    if not np.all(np.isfinite(g)):
        raise BadDiffusion("G is not finite on the check grid")
    if g.min() <= 0.0:
        raise BadDiffusion(f"G is not strictly positive (min {g.min():.3g})")
    if np.diff(g).min() < -tol:
        raise BadDiffusion("G is not increasing on the check grid")


def delay_sde_kernel(G=default_diffusion, dt=1.0 / 64, delta=1.0, check=True):
    """Euler-Maruyama for ``dM = -M dt + G(M_{t-1}) dB`` on grid path segments.

    The state is the segment of the path over the last unit of time, stored
    on ``1/dt + 1`` nodes; one step appends the new right endpoint and drops
    the oldest node.
    """
    m = _grid_nodes(dt)
    if check:
        check_diffusion(G)
    root = math.sqrt(dt)

    def noise(rng, size):
        return rng.standard_normal(size)

    def update(x, z):
        v = x[:, -1]
        new = v - v * dt + G(x[:, 0]) * root * z
        return np.concatenate([x[:, 1:], new[:, None]], axis=1)

    return Kernel(
        "delay_sde", path_space(delta), noise, update, dt=dt, continuous=True,
        params={"dt": dt, "delta": delta, "nodes": m + 1},
    )


# -- simulation -------------------------------------------------------------

def _initial_block(kernel, init, seed, b, start, stop):
    size = stop - start
    if isinstance(init, Starts):
        return np.array(init.states[start:stop])
    if isinstance(init, DiscreteMeasure):
        rng = streams.generator(seed, streams.INIT, b)
        return np.array(init.sample(rng, streams.BLOCK)[:size])
    x = _as_state(init)
    return np.repeat(x[None], size, axis=0)


def _run_block(kernel, init, seed, block, f, state_at, sum_at, record_all=False):
    b, start, stop = block
    size = stop - start
    rng = streams.generator(seed, streams.NOISE, b)
    x = _initial_block(kernel, init, seed, b, start, stop)
    horizon = max([0, *state_at, *sum_at])
    states = {}
    sums = {}
    path = [] if record_all else None
    total = np.zeros(size) if f is not None else None
    for k in range(horizon + 1):
        if record_all:
            path.append(x)
        if k in state_at:
            states[k] = x
        if k in sum_at:
            sums[k] = total.copy()
        if k == horizon:
            break
        if f is not None:
            total += f(x)
        # full-block draws keep trajectory i independent of the batch size
        x = kernel.update(x, kernel.noise(rng, streams.BLOCK)[:size])
    return states, sums, path


def propagate(kernel, init, n, seed, state_steps=(), f=None, sum_steps=(), workers=None):
    """Run ``n`` trajectories and collect per-trajectory results.

    Returns ``(states, sums)``: ``states[k]`` holds ``M_k`` for each
    trajectory and ``sums[k]`` holds ``f(M_0) + ... + f(M_{k-1})``.
    Steps are counted in kernel steps, not time units.
    """
    n = int(n)
    if n < 1:
        raise BadParameter("need at least one trajectory")
    state_at = {int(k) for k in state_steps}
    sum_at = {int(k) for k in sum_steps}
    if sum_at and f is None:
        raise ValueError("sum_steps needs a test function")
    blocks = streams.block_slices(n)
    results = streams.map_blocks(
        lambda blk: _run_block(kernel, init, seed, blk, f, state_at, sum_at),
        blocks, workers,
    )
    states = {k: np.concatenate([r[0][k] for r in results]) for k in sorted(state_at)}
    sums = {k: np.concatenate([r[1][k] for r in results]) for k in sorted(sum_at)}
    return states, sums


def simulate(kernel, x0, horizon, seed):
    """Trajectory 0 of ``seed`` from ``x0``, sampled at every kernel step up to ``horizon``."""
    steps = kernel.steps_for(horizon)
    _, _, path = _run_block(kernel, x0, seed, (0, 0, 1), None, {steps}, set(), record_all=True)
    states = np.concatenate(path)
    origin = x0 if not isinstance(x0, DiscreteMeasure) else "distribution"
    return Trajectory(states, kernel.dt, origin, kernel.continuous)


def marginal_sample(kernel, init, t, n, seed, workers=None):
    """Final states of ``n`` independent runs to time ``t``."""
    steps = kernel.steps_for(t)
    states, _ = propagate(kernel, init, n, seed, state_steps=[steps], workers=workers)
    return EmpiricalMeasure(states[steps])


def trajectory_noise(kernel, seed, i, n_steps):
    """Noise values that drive trajectory ``i`` of ``seed``, step by step."""
    b, col = divmod(int(i), streams.BLOCK)
    rng = streams.generator(seed, streams.NOISE, b)
    return np.array([kernel.noise(rng, streams.BLOCK)[col] for _ in range(n_steps)])
