"""Transportation simplex (MODI / stepping-stone) for balanced transport.

The basis is kept as a spanning tree of ``m + n - 1`` cells of the bipartite
row/column graph, so degenerate vertices are represented explicitly by basic
cells carrying zero mass.
"""

from collections import deque

import numpy as np

from .errors import SolverFailure

MAX_ITER = 10**6
# consecutive zero-step pivots before switching to the first-improving rule
_DEGENERATE_SWITCH = 50


def _northwest_corner(a, b):
    m, n = len(a), len(b)
    ra = a.astype(float).copy()
    rb = b.astype(float).copy()
    x = np.zeros((m, n))
    cells = []
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        x[i, j] = q
        cells.append((i, j))
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return x, cells


def _potentials(m, n, adj, C):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        if node < m:
            for col in adj[node]:
                if np.isnan(v[col - m]):
                    v[col - m] = C[node, col - m] - u[node]
                    queue.append(col)
        else:
            for row in adj[node]:
                if np.isnan(u[row]):
                    u[row] = C[row, node - m] - v[node - m]
                    queue.append(row)
    return u, v


def _tree_path(adj, start, goal):
    """Node path from ``start`` to ``goal`` in the basis tree."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt in adj[node]:
            if nxt not in parent:
                parent[nxt] = node
                queue.append(nxt)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path


def transport_simplex(a, b, C, max_iter=MAX_ITER, tol=1e-12):
    """Minimise ``<x, C>`` over plans with row sums ``a`` and column sums ``b``.

    Returns ``(x, n_iter)`` with ``x`` the optimal plan as a dense array.
    Raises ``SolverFailure`` when ``max_iter`` pivots do not reach optimality.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    m, n = C.shape
    x, cells = _northwest_corner(a, b)
    if m == 1 or n == 1:
        return x, 0

    basic = np.zeros((m, n), dtype=bool)
    # bipartite adjacency: rows are nodes 0..m-1, columns m..m+n-1
    adj = [set() for _ in range(m + n)]
    for i, j in cells:
        basic[i, j] = True
        adj[i].add(m + j)
        adj[m + j].add(i)

    threshold = -tol * (1.0 + float(np.abs(C).max()))
    degenerate_run = 0
    for it in range(max_iter):
        u, v = _potentials(m, n, adj, C)
        reduced = C - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        if degenerate_run < _DEGENERATE_SWITCH:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= threshold:
                return x, it
        else:
            negative = np.flatnonzero(reduced < threshold)
            if negative.size == 0:
                return x, it
            flat = int(negative[0])
        ei, ej = divmod(flat, n)

        path = _tree_path(adj, m + ej, ei)
        # edges along the path alternate -, +, -, ... starting at column ej
        minus, plus = [], []
        for k in range(len(path) - 1):
            p, q = path[k], path[k + 1]
            cell = (q, p - m) if p >= m else (p, q - m)
            (minus if k % 2 == 0 else plus).append(cell)
        masses = [x[c] for c in minus]
        leave = int(np.argmin(masses))
        theta = masses[leave]
        degenerate_run = degenerate_run + 1 if theta <= 0.0 else 0

        x[ei, ej] += theta
        for c in plus:
            x[c] += theta
        for c in minus:
            x[c] = max(x[c] - theta, 0.0)
        li, lj = minus[leave]
        x[li, lj] = 0.0
        basic[li, lj] = False
        adj[li].discard(m + lj)
        adj[m + lj].discard(li)
        basic[ei, ej] = True
        adj[ei].add(m + ej)
        adj[m + ej].add(ei)
    raise SolverFailure(f"transport simplex did not converge in {max_iter} iterations")
