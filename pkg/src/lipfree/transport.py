"""Exact transportation solvers used for the primal side of the free-space norm.

Both solvers work on plain Python numbers, so they run unchanged on floats or
on :class:`fractions.Fraction` (exact mode). The simplex uses Bland's rule
over cells numbered ``i * n_sinks + j``, which rules out cycling on
degenerate bases.
"""

from __future__ import annotations

from collections import deque
from itertools import combinations
from typing import Sequence

__all__ = ["transport_simplex", "exhaustive_transport", "TransportPlan"]

TransportPlan = dict  # {(i, j): flow}, positive flows only


def _northwest_corner(supply, demand):
    s, t = len(supply), len(demand)
    ra, rb = list(supply), list(demand)
    basis, flow = [], {}
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        basis.append((i, j))
        flow[(i, j)] = x
        ra[i] -= x
        rb[j] -= x
        if i == s - 1 and j == t - 1:
            break
        if j == t - 1 or (i < s - 1 and ra[i] <= rb[j]):
            i += 1
        else:
            j += 1
    return basis, flow


def _adjacency(basis, s, t):
    adj = [[] for _ in range(s + t)]
    for i, j in basis:
        adj[i].append(s + j)
        adj[s + j].append(i)
    return adj


def _potentials(basis, cost, s, t):
    adj = _adjacency(basis, s, t)
    pot = [None] * (s + t)
    pot[0] = 0 * cost[0][0]
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if pot[w] is None:
                # u_i + v_j = c_ij on basic cells
                if u < s:
                    pot[w] = cost[u][w - s] - pot[u]
                else:
                    pot[w] = cost[w][u - s] - pot[u]
                queue.append(w)
    return pot[:s], pot[s:]


def _tree_path(basis, s, t, src, dst):
    adj = _adjacency(basis, s, t)
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                queue.append(w)
    nodes = [dst]
    while nodes[-1] != src:
        nodes.append(prev[nodes[-1]])
    nodes.reverse()
    cells = []
    for a, b in zip(nodes, nodes[1:]):
        cells.append((a, b - s) if a < s else (b, a - s))
    return cells


def transport_simplex(
    supply: Sequence,
    demand: Sequence,
    cost: Sequence[Sequence],
    eps=0,
    max_iter: int = 100_000,
):
    """Minimise ``sum c_ij x_ij`` over transport plans from ``supply`` to ``demand``.

    ``supply`` and ``demand`` must be positive with equal totals (for floats,
    any residual imbalance is absorbed by the last sink). ``eps`` is the
    reduced-cost threshold; use ``0`` for exact arithmetic.

    Returns ``(value, plan)`` with ``plan`` mapping ``(i, j)`` to a positive flow.
    """
    s, t = len(supply), len(demand)
    if s == 0 or t == 0:
        if s or t:
            raise ValueError("unbalanced transport problem")
        return 0, {}
    demand = list(demand)
    gap = sum(supply) - sum(demand)
    if gap:
        if eps == 0:
            raise ValueError("supply and demand totals differ")
        demand[-1] += gap
    basis, flow = _northwest_corner(supply, demand)
    in_basis = set(basis)
    for _ in range(max_iter):
        u, v = _potentials(basis, cost, s, t)
        entering = None
        for i in range(s):
            for j in range(t):
                if (i, j) not in in_basis and cost[i][j] - u[i] - v[j] < -eps:
                    entering = (i, j)
                    break
            if entering is not None:
                break
        if entering is None:
            break
        i0, j0 = entering
        path = _tree_path(basis, s, t, i0, s + j0)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min((c for c in minus if flow[c] <= theta), key=lambda c: c[0] * t + c[1])
        for c in minus:
            flow[c] = max(flow[c] - theta, 0 * theta)
        for c in plus:
            flow[c] += theta
        flow[entering] = theta
        del flow[leaving]
        basis.remove(leaving)
        in_basis.discard(leaving)
        basis.append(entering)
        in_basis.add(entering)
    else:
        raise RuntimeError("transport simplex did not terminate")
    plan = {c: x for c, x in flow.items() if x > 0}
    value = sum(cost[i][j] * x for (i, j), x in plan.items())
    return value, plan


def _tree_flows(cells, supply, demand):
    """Flows on a spanning tree of the bipartite graph, by peeling leaves."""
    s, t = len(supply), len(demand)
    rem = list(supply) + list(demand)
    live = set(cells)
    deg = [0] * (s + t)
    for i, j in cells:
        deg[i] += 1
        deg[s + j] += 1
    flow = {}
    while live:
        leaf = next((k for k in range(s + t) if deg[k] == 1), None)
        if leaf is None:
            return None
        cell = next(c for c in live if c[0] == leaf or s + c[1] == leaf)
        x = rem[leaf]
        flow[cell] = x
        i, j = cell
        rem[i] -= x
        rem[s + j] -= x
        deg[i] -= 1
        deg[s + j] -= 1
        live.remove(cell)
    return flow


def exhaustive_transport(supply: Sequence, demand: Sequence, cost: Sequence[Sequence]):
    """Brute force over every basic solution (spanning tree of cells).

    Exponential; meant as an oracle for supports of at most four points.
    Returns ``(value, plan)`` like :func:`transport_simplex`.
    """
    s, t = len(supply), len(demand)
    if s == 0 and t == 0:
        return 0, {}
    cells = [(i, j) for i in range(s) for j in range(t)]
    best = None
    for tree in combinations(cells, s + t - 1):
        adj = _adjacency(tree, s, t)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != s + t:
            continue
        flow = _tree_flows(tree, supply, demand)
        if flow is None or any(x < 0 for x in flow.values()):
            continue
        value = sum(cost[i][j] * x for (i, j), x in flow.items())
        if best is None or value < best[0]:
            best = (value, {c: x for c, x in flow.items() if x > 0})
    if best is None:
        raise ValueError("no feasible transport plan")
    return best
