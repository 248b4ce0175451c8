"""Independent reference implementations used only to check the real ones.

These deliberately use the dumbest correct method available (grid search,
full enumeration, pair counting) and share no code with the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_position(distances, geometry, step_mm: float = 0.5) -> np.ndarray:
    """Grid-search minimizer of sum((|p - s_i| - d_i)^2) over the board."""
    d = np.asarray(distances, float)
    xs = np.arange(0.0, geometry.board_width_mm + step_mm / 2, step_mm)
    ys = np.arange(0.0, geometry.board_height_mm + step_mm / 2, step_mm)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    cost = np.zeros_like(gx)
    for (sx, sy), di in zip(geometry.positions, d):
        cost += (np.hypot(gx - sx, gy - sy) - di) ** 2
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    return np.array([xs[i], ys[j]])


def u_statistic_by_pair_count(a, b) -> float:
    """U for sample ``a`` counted directly over pairs (ties count half)."""
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def wilcoxon_exact_p_two_sided(a, b) -> float:
    """Exact two-sided rank-sum p-value by full enumeration.

    No-tie samples only. Enumerates every way the n_a rank positions can
    fall among n_a + n_b and counts assignments at least as far from the
    null mean as the observed U.
    """
    n_a, n_b = len(a), len(b)
    combined = sorted(a) + sorted(b)
    assert len(set(combined)) == n_a + n_b, "oracle requires tie-free samples"
    u_obs = u_statistic_by_pair_count(a, b)
    center = n_a * n_b / 2.0
    extreme = 0
    total = 0
    offset = n_a * (n_a + 1) / 2.0
    for positions in itertools.combinations(range(n_a + n_b), n_a):
        ranks = sum(positions) + n_a  # 1-based rank sum
        u = ranks - offset
        if abs(u - center) >= abs(u_obs - center) - 1e-12:
            extreme += 1
        total += 1
    assert total == math.comb(n_a + n_b, n_a)
    return extreme / total
