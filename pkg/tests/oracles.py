"""Brute-force LP oracles, independent of the solver and of ``build_problem``."""

from __future__ import annotations

import itertools

import numpy as np


def vertex_enumeration(c, A_ub, b_ub, lo, hi, tol=1e-9):
    """Minimise ``c.x`` over ``{A_ub x <= b_ub, lo <= x <= hi}`` by visiting every vertex.

    Each vertex is the solution of ``n`` linearly independent active
    constraints. Returns ``(objective, x)`` or ``(None, None)`` if infeasible.
    The box must be finite so the polytope is bounded.
    """
    c = np.asarray(c, float)
    n = c.size
    A = np.asarray(A_ub, float).reshape(-1, n)
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([np.asarray(b_ub, float), np.asarray(hi, float), -np.asarray(lo, float)])
    best, best_x = None, None
    for rows in itertools.combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + tol * np.maximum(1.0, np.abs(h))):
            val = float(c @ x)
            if best is None or val < best - 1e-12:
                best, best_x = val, x
    return best, best_x


def transfer_lp_oracle(costs, demands, limit, chunk=200_000):
    """Optimum of the slot-allocation LP by enumerating every basis.

    ``costs[i]`` is request i's per-slot intensity up to its deadline and
    ``demands[i]`` its volume in limit-slot units (Gbps x slots). With strictly
    positive costs every optimum delivers exactly the demand, so the optimum is
    a vertex of ``{sum_j x_ij = d_i, sum_i x_ij + s_j = L, x, s >= 0}`` (the
    per-variable cap ``x_ij <= L`` is implied by the slot rows). All
    ``m``-column bases are solved in batches; returns ``None`` if none is
    feasible.
    """
    n_req = len(costs)
    horizon = max(len(c) for c in costs)
    cols = [(i, j) for i, c in enumerate(costs) for j in range(len(c))]
    n_x = len(cols)
    m = n_req + horizon
    M = np.zeros((m, n_x + horizon))
    cost = np.zeros(n_x + horizon)
    for k, (i, j) in enumerate(cols):
        M[i, k] = 1.0
        M[n_req + j, k] = 1.0
        cost[k] = costs[i][j]
    M[n_req:, n_x:] = np.eye(horizon)
    rhs = np.concatenate([np.asarray(demands, float), np.full(horizon, float(limit))])

    # bit r of touch[k] is set when column k has a nonzero in row r
    touch = (M != 0).astype(np.int64).T @ (1 << np.arange(m, dtype=np.int64))
    every_row = (1 << m) - 1

    best = None
    combos = itertools.chain.from_iterable(itertools.combinations(range(M.shape[1]), m))
    while True:
        flat = np.fromiter(itertools.islice(combos, chunk * m), dtype=np.int64)
        if flat.size == 0:
            break
        batch = flat.reshape(-1, m)
        # a basis must touch every row; dropping the rest skips most determinants
        batch = batch[np.bitwise_or.reduce(touch[batch], axis=1) == every_row]
        if batch.size == 0:
            continue
        B = M[:, batch].transpose(1, 0, 2)  # (k, m, m)
        det = np.linalg.det(B)
        ok = np.abs(det) > 1e-9
        if not np.any(ok):
            continue
        xb = np.linalg.solve(B[ok], np.broadcast_to(rhs, (int(ok.sum()), m))[..., None])[..., 0]
        feasible = np.all(xb >= -1e-9, axis=1)
        if not np.any(feasible):
            continue
        vals = np.einsum("km,km->k", cost[batch[ok][feasible]], xb[feasible])
        low = float(vals.min())
        best = low if best is None else min(best, low)
    return best
