"""CSV import/export for measures, trajectories, curves, fits and chains.

Floats are written with ``repr`` so that files round-trip exactly and equal
inputs produce byte-identical output.
"""

import csv
from pathlib import Path

import numpy as np

from .ergodic import ConvergenceCurve, RateFit
from .kernels import Trajectory
from .measures import DiscreteMeasure
from .oracle import FiniteChain


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _coords(points):
    pts = np.asarray(points)
    return pts[:, None] if pts.ndim == 1 else pts


def write_measure(mu, path):
    coords = _coords(mu.atoms)
    fh, w = _writer(path)
    with fh:
        w.writerow(["atom_id", *[f"x{i}" for i in range(coords.shape[1])], "weight"])
        for i, (row, wt) in enumerate(zip(coords, mu.weights)):
            w.writerow([i, *map(_fmt, row), _fmt(wt)])


def read_measure(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header, body = rows[0], rows[1:]
    if header[0] != "atom_id" or header[-1] != "weight":
        raise ValueError(f"{path}: expected header atom_id,...,weight")
    coords = np.array([[float(v) for v in r[1:-1]] for r in body])
    weights = np.array([float(r[-1]) for r in body])
    atoms = coords[:, 0] if coords.shape[1] == 1 else coords
    return DiscreteMeasure(atoms, weights)


def write_trajectory(traj, path):
    coords = _coords(traj.states)
    fh, w = _writer(path)
    with fh:
        w.writerow(["t", *[f"x{i}" for i in range(coords.shape[1])]])
        for t, row in zip(traj.times, coords):
            w.writerow([_fmt(t), *map(_fmt, row)])


def read_trajectory(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r][1:]
    times = np.array([float(r[0]) for r in rows])
    coords = np.array([[float(v) for v in r[1:]] for r in rows])
    states = coords[:, 0] if coords.shape[1] == 1 else coords
    step = float(times[1] - times[0]) if len(times) > 1 else 1.0
    return Trajectory(states, step)


def write_curve(curve, path):
    fh, w = _writer(path)
    with fh:
        w.writerow(["t", "value", "half_width", "n"])
        for t, v, h, n in curve.entries():
            w.writerow([_fmt(t), _fmt(v), _fmt(h), _fmt(n)])


def read_curve(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r][1:]
    cols = list(zip(*rows)) if rows else [(), (), (), ()]
    return ConvergenceCurve(
        [float(v) for v in cols[0]], [float(v) for v in cols[1]],
        [float(v) for v in cols[2]], [int(v) for v in cols[3]],
    )


def write_fit(fit, path):
    fh, w = _writer(path)
    with fh:
        w.writerow(["C", "c", "residual", "window_lo", "window_hi"])
        w.writerow([_fmt(fit.C), _fmt(fit.c), _fmt(fit.residual),
                    _fmt(fit.window[0]), _fmt(fit.window[1])])


def read_fit(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    C, c, res, lo, hi = (float(v) for v in rows[1])
    return RateFit(C, c, res, (lo, hi))


def load_chain(path):
    """Read a chain stored as ``k`` transition rows followed by ``k`` distance rows.

    Blank lines and lines starting with ``#`` are ignored.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        values = [[float(v) for v in r] for r in rows]
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if not values or len(values) % 2:
        raise ValueError(f"{path}: expected 2k rows (k matrix rows then k distance rows)")
    k = len(values) // 2
    if any(len(r) != k for r in values):
        raise ValueError(f"{path}: every row must have {k} entries")
    return FiniteChain(np.array(values[:k]), None, np.array(values[k:]))


def save_chain(chain, path):
    fh, w = _writer(path)
    with fh:
        for row in chain.P:
            w.writerow(map(_fmt, row))
        for row in chain.dist:
            w.writerow(map(_fmt, row))
