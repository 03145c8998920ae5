"""Task-sequencing as a TSP over task poses, anchored at the robot home node.

Node 0 is the home pose; edges are Euclidean distances between positions
(orientation is ignored).  The exact solver is Held-Karp dynamic
programming; the heuristic is nearest-neighbor construction with 2-opt
improvement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

EXACT_NODE_LIMIT = 16
AUTO_EXACT_LIMIT = 12


class TspSizeError(ValueError):
    """Exact solver refused: instance too large for Held-Karp."""


@dataclass(frozen=True)
class TspInstance:
    weights: np.ndarray  # (n+1)^2, symmetric, zero diagonal

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if np.max(np.abs(w - w.T)) > 1e-9 or np.any(np.abs(np.diag(w)) > 1e-12):
            raise ValueError("weight matrix must be symmetric with zero diagonal")
        object.__setattr__(self, "weights", w)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Tour:
    order: tuple   # node indices, starting and ending at 0
    total_cost: float


def tour_cost(w: np.ndarray, order) -> float:
    return float(sum(w[order[i], order[i + 1]] for i in range(len(order) - 1)))


def build_weight_matrix(positions) -> TspInstance:
    """Instance over home + task positions; W_ij = ||p_i - p_j||."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    if pts.shape[0] < 1:
        raise ValueError("at least one node required")
    diff = pts[:, None, :] - pts[None, :, :]
    w = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(w, 0.0)
    w = 0.5 * (w + w.T)  # kill asymmetry noise
    return TspInstance(w)


def solve_exact(instance: TspInstance) -> Tour:
    """Held-Karp over circuits through node 0; refuses n > EXACT_NODE_LIMIT."""
    n = instance.n_nodes
    if n > EXACT_NODE_LIMIT:
        raise TspSizeError(f"{n} nodes exceeds exact-solver limit {EXACT_NODE_LIMIT}")
    w = instance.weights
    if n == 1:
        return Tour((0, 0), 0.0)
    m = n - 1  # nodes 1..n-1
    full = 1 << m
    dp = np.full((full, m), math.inf)
    parent = np.full((full, m), -1, dtype=int)
    for j in range(m):
        dp[1 << j, j] = w[0, j + 1]
    for mask in range(full):
        for j in range(m):
            cur = dp[mask, j]
            if not math.isfinite(cur):
                continue
            for k in range(m):
                if mask & (1 << k):
                    continue
                nm = mask | (1 << k)
                cand = cur + w[j + 1, k + 1]
                if cand < dp[nm, k]:
                    dp[nm, k] = cand
                    parent[nm, k] = j
    best_cost, best_j = math.inf, -1
    last = full - 1
    for j in range(m):
        c = dp[last, j] + w[j + 1, 0]
        if c < best_cost:
            best_cost, best_j = c, j
    order = [0]
    mask, j = last, best_j
    rev = []
    while j >= 0:
        rev.append(j + 1)
        pj = parent[mask, j]
        mask ^= 1 << j
        j = pj
    order += rev[::-1] + [0]
    return Tour(tuple(order), float(best_cost))


def _nearest_neighbor(w: np.ndarray) -> list:
    n = w.shape[0]
    order = [0]
    todo = set(range(1, n))
    cur = 0
    while todo:
        nxt = min(todo, key=lambda j: (w[cur, j], j))
        order.append(nxt)
        todo.discard(nxt)
        cur = nxt
    order.append(0)
    return order


def _two_opt(w: np.ndarray, order: list) -> list:
    n = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(1, n - 2):
            for j in range(i + 1, n - 1):
                a, b = order[i - 1], order[i]
                c, d = order[j], order[j + 1]
                delta = (w[a, c] + w[b, d]) - (w[a, b] + w[c, d])
                if delta < -1e-12:
                    order[i:j + 1] = order[i:j + 1][::-1]
                    improved = True
    return order


def solve_heuristic(instance: TspInstance) -> Tour:
    """Nearest-neighbor + 2-opt; valid circuit, never worse than NN alone."""
    w = instance.weights
    if instance.n_nodes == 1:
        return Tour((0, 0), 0.0)
    order = _two_opt(w, _nearest_neighbor(w))
    return Tour(tuple(order), tour_cost(w, order))


def solve_brute_force(instance: TspInstance) -> Tour:
    """Reference oracle: full permutation search (tests only, tiny n)."""
    w = instance.weights
    n = instance.n_nodes
    best, best_order = math.inf, (0, 0)
    for perm in permutations(range(1, n)):
        order = (0,) + perm + (0,)
        c = tour_cost(w, order)
        if c < best:
            best, best_order = c, order
    if n == 1:
        return Tour((0, 0), 0.0)
    return Tour(best_order, best)


def order_tasks(tasks: list, home_position, positions, mode: str = "auto") -> tuple:
    """Reorder tasks per the optimal circuit; returns (ordered tasks, Tour).

    positions: one 3-vector per task; home_position anchors node 0.
    mode: "exact" | "heuristic" | "auto" (exact up to AUTO_EXACT_LIMIT nodes).
    """
    if len(tasks) != len(positions):
        raise ValueError("tasks and positions must align")
    if not tasks:
        return [], Tour((0, 0), 0.0)
    pts = [np.asarray(home_position, dtype=float)] + [np.asarray(p, dtype=float) for p in positions]
    inst = build_weight_matrix(pts)
    if mode == "auto":
        mode = "exact" if inst.n_nodes <= AUTO_EXACT_LIMIT else "heuristic"
    if mode == "exact":
        tour = solve_exact(inst)
    elif mode == "heuristic":
        tour = solve_heuristic(inst)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ordered = [tasks[i - 1] for i in tour.order[1:-1]]
    return ordered, tour
