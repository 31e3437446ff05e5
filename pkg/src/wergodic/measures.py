"""Finitely supported probability measures and distances between them.

Points are numpy scalars (real-valued or integer-labelled spaces) or 1-d
arrays (path segments).  A measure stores its atoms as an array whose first
axis indexes atoms.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from ._simplex import MAX_ITER, transport_simplex
from .errors import AtomOutOfRange, InvalidMeasure, SolverFailure

WEIGHT_TOL = 1e-12
DUST = 1e-15


def truncate_metric(dist, mode="min1"):
    """Bounded version of ``dist``: ``1 ∧ d`` (``"min1"``) or ``d / (1 + d)`` (``"ratio"``).

    Both induce the same topology as ``dist``.
    """
    if mode == "min1":
        def bounded(x, y):
            return np.minimum(1.0, dist(x, y))
    elif mode == "ratio":
        def bounded(x, y):
            d = dist(x, y)
            return d / (1.0 + d)
    else:
        raise ValueError(f"unknown truncation mode {mode!r}")
    return bounded


@dataclass(frozen=True)
class MetricSpace:
    """A point domain with a metric bounded by 1.

    ``dist`` must broadcast over leading axes; ``point_ndim`` is 0 for scalar
    points and 1 for vector points.  ``interval`` is set when the metric is
    ``|x - y|`` restricted to an interval of length at most 1, which enables
    the closed-form 1-d transport cost.
    """

    name: str
    dist: Callable
    point_ndim: int = 0
    interval: Optional[tuple] = None
    labels: Optional[tuple] = field(default=None, compare=False)

    def distance(self, x, y):
        return float(self.dist(np.asarray(x), np.asarray(y)))

    def pairwise(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        if self.point_ndim == 0:
            return np.asarray(self.dist(a[:, None], b[None, :]), dtype=float)
        return np.asarray(self.dist(a[:, None, :], b[None, :, :]), dtype=float)


def _abs_diff(x, y):
    return np.abs(x - y)


def interval_space(lo=0.0, hi=1.0):
    if not hi - lo <= 1.0:
        raise ValueError("interval longer than 1 needs a truncated metric; use real_line")
    return MetricSpace(f"interval[{lo},{hi}]", _abs_diff, 0, (float(lo), float(hi)))


def real_line(mode="min1"):
    return MetricSpace(f"real_line[{mode}]", truncate_metric(_abs_diff, mode), 0)


def finite_space(dist_matrix, labels=None):
    D = np.asarray(dist_matrix, dtype=float)
    k = D.shape[0]
    if D.shape != (k, k):
        raise ValueError("distance matrix must be square")
    if np.any(np.diag(D) != 0) or not np.array_equal(D, D.T):
        raise ValueError("distance matrix must be symmetric with zero diagonal")
    if D.max() > 1.0 or D.min() < 0.0:
        raise ValueError("distances must lie in [0, 1]")
    if k and np.any(D[:, None, :] > D[:, :, None] + D[None, :, :] + 1e-12):
        raise ValueError("distance matrix violates the triangle inequality")
    D.setflags(write=False)

    def dist(i, j):
        return D[i, j]

    labels = tuple(range(k)) if labels is None else tuple(labels)
    return MetricSpace(f"finite[{k}]", dist, 0, None, labels)


def discrete_metric_space(k):
    return finite_space(1.0 - np.eye(k))


def path_space(delta=1.0):
    """Grid path segments under ``1 ∧ max|x - y| / delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")

    def dist(x, y):
        return np.minimum(1.0, np.max(np.abs(x - y), axis=-1) / delta)

    return MetricSpace(f"path[delta={delta}]", dist, 1)


class DiscreteMeasure:
    """Probability measure on finitely many atoms.

    Duplicate atoms are merged and weights below 1e-15 dropped on
    construction; atoms come out sorted (lexicographically for vector
    points).
    """

    __slots__ = ("atoms", "weights")

    def __init__(self, atoms, weights):
        atoms = np.asarray(atoms)
        weights = np.asarray(weights, dtype=float)
        if atoms.ndim == 0:
            atoms = atoms[None]
        if weights.ndim != 1 or len(weights) != len(atoms) or len(atoms) == 0:
            raise InvalidMeasure("need one weight per atom and at least one atom")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidMeasure("weights must be finite and nonnegative")
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidMeasure(f"weights sum to {total!r}, not 1")
        if atoms.ndim == 1:
            uniq, inverse = np.unique(atoms, return_inverse=True)
        else:
            uniq, inverse = np.unique(atoms, axis=0, return_inverse=True)
        merged = np.bincount(inverse.reshape(-1), weights=weights, minlength=len(uniq))
        keep = merged >= DUST
        uniq, merged = uniq[keep], merged[keep]
        merged = merged / merged.sum()
        uniq.setflags(write=False)
        merged.setflags(write=False)
        object.__setattr__(self, "atoms", uniq)
        object.__setattr__(self, "weights", merged)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteMeasure is immutable")

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"DiscreteMeasure(n_atoms={len(self)})"

    @classmethod
    def dirac(cls, x):
        x = np.asarray(x)
        return cls(x[None], [1.0])

    @classmethod
    def uniform(cls, atoms):
        atoms = np.asarray(atoms)
        return cls(atoms, np.full(len(atoms), 1.0 / len(atoms)))

    def expect(self, f):
        return float(np.dot(self.weights, np.asarray(f(self.atoms), dtype=float)))

    def sample(self, rng, n):
        idx = rng.choice(len(self.weights), size=n, p=self.weights)
        return self.atoms[idx]

    def allclose(self, other, atol=1e-12):
        return (
            self.atoms.shape == other.atoms.shape
            and np.allclose(self.atoms, other.atoms, atol=atol, rtol=0)
            and np.allclose(self.weights, other.weights, atol=atol, rtol=0)
        )


class EmpiricalMeasure:
    """Uniform measure on samples (repeats allowed)."""

    __slots__ = ("samples",)

    def __init__(self, samples):
        samples = np.array(samples)
        if samples.ndim == 0 or len(samples) < 1:
            raise InvalidMeasure("an empirical measure needs at least one sample")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __setattr__(self, name, value):
        raise AttributeError("EmpiricalMeasure is immutable")

    def __len__(self):
        return len(self.samples)

    def __repr__(self):
        return f"EmpiricalMeasure(n={len(self)})"

    def to_discrete(self):
        return DiscreteMeasure(self.samples, np.full(len(self.samples), 1.0 / len(self.samples)))

    def expect(self, f):
        return float(np.mean(np.asarray(f(self.samples), dtype=float)))


def as_discrete(mu):
    if isinstance(mu, DiscreteMeasure):
        return mu
    if isinstance(mu, EmpiricalMeasure):
        return mu.to_discrete()
    raise TypeError(f"expected a measure, got {type(mu).__name__}")


def union_support(mu, nu):
    """Common atoms of two measures with both weight vectors aligned to them."""
    mu, nu = as_discrete(mu), as_discrete(nu)
    both = np.concatenate([mu.atoms, nu.atoms])
    if both.ndim == 1:
        atoms, inverse = np.unique(both, return_inverse=True)
    else:
        atoms, inverse = np.unique(both, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    k = len(atoms)
    wm = np.bincount(inverse[: len(mu)], weights=mu.weights, minlength=k)
    wn = np.bincount(inverse[len(mu):], weights=nu.weights, minlength=k)
    return atoms, wm, wn


def tv_discrete(mu, nu):
    """Total variation distance ``(1/2) sum |mu(a) - nu(a)|``."""
    _, wm, wn = union_support(mu, nu)
    return float(0.5 * np.abs(wm - wn).sum())


def w1_1d(mu, nu):
    """Exact W1 on the line as the integral of ``|F_mu - F_nu|``.

    All atoms must fit in an interval of length 1, so that ``|x - y|``
    coincides with its truncation.
    """
    atoms, wm, wn = union_support(mu, nu)
    if atoms.ndim != 1:
        raise AtomOutOfRange("w1_1d needs scalar atoms")
    atoms = atoms.astype(float)
    if atoms[-1] - atoms[0] > 1.0 + 1e-12:
        raise AtomOutOfRange(
            f"atoms span {atoms[-1] - atoms[0]:.6g} > 1; the metric is truncated there"
        )
    gap = np.cumsum(wm - wn)[:-1]
    return float(np.dot(np.abs(gap), np.diff(atoms)))


def w1_1d_rows(rows, ref):
    """W1 between each row's empirical measure and ``ref``, via quantile functions.

    ``rows`` has shape ``(r, n)``; every row is read as the uniform measure on
    its ``n`` entries.  Vectorised counterpart of :func:`w1_1d` for the many
    small empirical measures produced by nested Monte Carlo.
    """
    rows = np.sort(np.asarray(rows, dtype=float), axis=1)
    ref = as_discrete(ref)
    n = rows.shape[1]
    ref_atoms = ref.atoms.astype(float)
    lo = min(rows.min(), ref_atoms[0])
    hi = max(rows.max(), ref_atoms[-1])
    if hi - lo > 1.0 + 1e-12:
        raise AtomOutOfRange(f"atoms span {hi - lo:.6g} > 1")
    cum = np.cumsum(ref.weights)
    cum[-1] = 1.0
    breaks = np.union1d(np.arange(n + 1) / n, np.concatenate([[0.0], cum]))
    widths = np.diff(breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    row_idx = np.minimum((mids * n).astype(int), n - 1)
    ref_idx = np.minimum(np.searchsorted(cum, mids, side="right"), len(cum) - 1)
    gaps = np.abs(rows[:, row_idx] - ref_atoms[ref_idx][None, :])
    return gaps @ widths


@dataclass(frozen=True)
class TransportPlan:
    source: np.ndarray
    target: np.ndarray
    mass: np.ndarray
    value: float

    def dense(self, m, n):
        out = np.zeros((m, n))
        np.add.at(out, (self.source, self.target), self.mass)
        return out


def _order_key(mu):
    return (len(mu.weights), mu.atoms.tobytes(), mu.weights.tobytes())


def _is_uniform_pair(mu, nu):
    m = len(mu.weights)
    return (m == len(nu.weights) and np.ptp(mu.weights) <= WEIGHT_TOL / m
            and np.ptp(nu.weights) <= WEIGHT_TOL / m)


def w1_exact(mu, nu, space, max_iter=MAX_ITER, method="auto"):
    """Minimal transport cost between ``mu`` and ``nu`` with its optimal plan.

    ``method="simplex"`` always runs the transportation simplex.  The default
    switches to an assignment solver when both measures are uniform on the
    same number of atoms, where some optimal plan is a permutation.  Atom
    indices in the plan refer to the canonicalised atoms of ``mu`` and ``nu``.
    """
    if method not in ("auto", "simplex"):
        raise ValueError(f"unknown method {method!r}")
    mu, nu = as_discrete(mu), as_discrete(nu)
    # solve in a canonical orientation so that swapping the arguments is exact
    flip = _order_key(nu) < _order_key(mu)
    if flip:
        mu, nu = nu, mu
    C = space.pairwise(mu.atoms, nu.atoms)
    if method == "auto" and _is_uniform_pair(mu, nu):
        src, tgt = linear_sum_assignment(C)
        mass = np.full(len(src), 1.0 / len(src))
    else:
        x, _ = transport_simplex(mu.weights, nu.weights, C, max_iter=max_iter)
        src, tgt = np.nonzero(x > 0)
        mass = x[src, tgt]
    value = float(np.dot(mass, C[src, tgt]))
    if flip:
        src, tgt = tgt, src
        order = np.lexsort((tgt, src))
        src, tgt, mass = src[order], tgt[order], mass[order]
    return value, TransportPlan(src, tgt, mass, value)


class DualSolution(NamedTuple):
    value: float
    atoms: np.ndarray
    potential: np.ndarray


def w1_dual(mu, nu, space):
    """Kantorovich-Rubinstein dual: max of ``sum f (mu - nu)`` over 1-Lipschitz ``f``.

    The potential lives on the union of both supports and is shifted so its
    minimum is 0.  Solved with HiGHS, independently of :func:`w1_exact`.
    """
    atoms, wm, wn = union_support(mu, nu)
    k = len(atoms)
    c = wm - wn
    if k == 1 or not np.any(c):
        return DualSolution(0.0, atoms, np.zeros(k))
    D = space.pairwise(atoms, atoms)
    ii, jj = np.nonzero(~np.eye(k, dtype=bool))
    A = np.zeros((len(ii), k))
    A[np.arange(len(ii)), ii] = 1.0
    A[np.arange(len(ii)), jj] = -1.0
    bounds = [(0.0, 0.0)] + [(None, None)] * (k - 1)
    res = linprog(-c, A_ub=A, b_ub=D[ii, jj], bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverFailure(f"dual LP failed: {res.message}")
    f = res.x - res.x.min()
    return DualSolution(float(np.dot(c, f)), atoms, f)


def wasserstein(mu, nu, space):
    """W1 value, using the closed form on unit intervals and the simplex elsewhere."""
    if space.interval is not None:
        return w1_1d(mu, nu)
    return w1_exact(mu, nu, space)[0]


def lebesgue_midpoints(m, lo=0.0, hi=1.0):
    """Uniform measure on the ``m`` cell midpoints of ``[lo, hi]``."""
    return DiscreteMeasure.uniform(lo + (hi - lo) * (np.arange(m) + 0.5) / m)
