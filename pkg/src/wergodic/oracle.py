"""Exact computations on small finite-state chains.

These are the brute-force references that the Monte Carlo estimators in
:mod:`wergodic.ergodic` are checked against: matrix powers, the stationary
law by a dense linear solve, and moments of the time average by enumerating
every path.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, NonUniqueStationary, NotStochastic
from .measures import DiscreteMeasure, finite_space, w1_exact

PATH_CAP = 10**7
PRUNE = 1e-16
MAX_STATES = 200


def check_stochastic(P, tol=1e-12):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NotStochastic(f"transition matrix must be square and nonempty, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise NotStochastic("transition matrix has negative or non-finite entries")
    bad = np.flatnonzero(np.abs(P.sum(axis=1) - 1.0) > tol)
    if bad.size:
        raise NotStochastic(f"row {int(bad[0])} sums to {P[bad[0]].sum()!r}")
    return P


@dataclass(frozen=True)
class FiniteChain:
    P: np.ndarray
    labels: tuple = None
    dist: np.ndarray = None
    space: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        P = check_stochastic(self.P).copy()
        k = P.shape[0]
        D = 1.0 - np.eye(k) if self.dist is None else np.array(self.dist, dtype=float)
        labels = tuple(range(k)) if self.labels is None else tuple(self.labels)
        if len(labels) != k:
            raise ValueError(f"{len(labels)} labels for {k} states")
        space = finite_space(D, labels)
        P.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "dist", D)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "space", space)

    @property
    def k(self):
        return self.P.shape[0]


def transition_row(chain, x, n):
    row = np.zeros(chain.k)
    row[int(x)] = 1.0
    return row @ np.linalg.matrix_power(chain.P, int(n))


def matrix_power_marginal(chain, x, n):
    """Law of the chain after ``n`` steps from state index ``x``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return DiscreteMeasure(np.arange(chain.k), transition_row(chain, x, n))


def stationary_distribution(chain):
    """Unique solution of ``pi P = pi``, ``sum(pi) = 1``.

    Uses a dense solve rather than power iteration so periodic chains work.
    """
    k = chain.k
    if k > MAX_STATES:
        raise CapExceeded(f"{k} states; dense solve limited to {MAX_STATES}")
    A = chain.P.T - np.eye(k)
    sv = np.linalg.svd(A, compute_uv=False)
    nullity = int(np.sum(sv <= 1e-10 * max(1.0, sv[0] if sv.size else 1.0)))
    if nullity > 1:
        raise NonUniqueStationary(f"invariant laws form a {nullity}-dimensional family")
    M = np.vstack([A, np.ones(k)])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return DiscreteMeasure(np.arange(k), pi)


def stationary_vector(chain):
    pi = np.zeros(chain.k)
    measure = stationary_distribution(chain)
    pi[measure.atoms] = measure.weights
    return pi


def enumerate_time_averages(chain, x, f, t):
    """Probabilities and time averages of every path ``M_0 = x, ..., M_{t-1}``.

    Paths are expanded level by level in a fixed order; branches with
    probability below 1e-16 are dropped.
    """
    f = np.asarray(f, dtype=float)
    k = chain.k
    t = int(t)
    if t < 1:
        raise ValueError("t must be at least 1")
    if k**t > PATH_CAP:
        raise CapExceeded(f"{k}**{t} paths exceeds the enumeration cap {PATH_CAP}")
    prob = np.array([1.0])
    total = np.array([f[int(x)]])
    last = np.array([int(x)])
    states = np.arange(k)
    for _ in range(t - 1):
        prob = (prob[:, None] * chain.P[last]).ravel()
        total = (total[:, None] + f[None, :]).ravel()
        last = np.tile(states, len(last))
        keep = prob >= PRUNE
        prob, total, last = prob[keep], total[keep], last[keep]
    return prob, total / t


def exact_lp_error(chain, x, f, p, t, pi_f=None):
    """``(E^x |A_t f - pi(f)|^p)^(1/p)`` by total path enumeration."""
    if p < 1:
        raise ValueError("p must be at least 1")
    f = np.asarray(f, dtype=float)
    if pi_f is None:
        pi_f = float(stationary_vector(chain) @ f)
    prob, avg = enumerate_time_averages(chain, x, f, t)
    return float(np.dot(prob, np.abs(avg - pi_f) ** p) ** (1.0 / p))


def exact_second_moment(chain, x, f, t, pi_f=None):
    """``E^x[(A_t f)^2] - pi(f)^2`` by total path enumeration."""
    f = np.asarray(f, dtype=float)
    if pi_f is None:
        pi_f = float(stationary_vector(chain) @ f)
    prob, avg = enumerate_time_averages(chain, x, f, t)
    return float(np.dot(prob, avg**2) - pi_f**2)


def exact_marginal_w1(chain, x, n, pi=None):
    """Exact W1 between ``P^n(x, .)`` and the stationary law."""
    pi = stationary_distribution(chain) if pi is None else pi
    return w1_exact(matrix_power_marginal(chain, x, n), pi, chain.space)[0]
