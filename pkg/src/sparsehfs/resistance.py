"""Exact and multiplicatively-approximate effective resistances for all edges."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, incidence, is_connected
from .solver import SddSystem, SolveOptions, laplacian_pseudoinverse_dense, solve

# Rows in the random-projection sketch: ceil(C * ln(n) / (alpha-1)^2).
# C = 20 keeps the all-edges multiplicative bracket failure rate near 1/n^2
# at the scales this package targets; calibrated by the seeded sketch tests.
SKETCH_ROW_CONSTANT = 20.0


@dataclass(frozen=True)
class ResistanceEstimate:
    """Per-edge effective resistances aligned with the graph's canonical edge order."""

    values: np.ndarray
    alpha: float      # claimed multiplicative accuracy, 1 for exact
    mode: str         # "exact" | "sketched"

    def __post_init__(self):
        if np.any(self.values <= 0):
            raise ValueError("effective resistances must be strictly positive")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")


def exact_resistances(g: Graph, dense_cap: int = 2000) -> ResistanceEstimate:
    """R_e = b_e^T L^+ b_e for every edge, via the dense pseudoinverse oracle."""
    if not is_connected(g):
        raise ValueError("graph is disconnected: effective resistances undefined")
    lp = laplacian_pseudoinverse_dense(g, dense_cap=dense_cap)
    u, v = g.edges[:, 0], g.edges[:, 1]
    vals = lp[u, u] + lp[v, v] - 2.0 * lp[u, v]
    return ResistanceEstimate(np.maximum(vals, 1e-300), alpha=1.0, mode="exact")


def sketch_rows(n: int, alpha: float, constant: float = SKETCH_ROW_CONSTANT) -> int:
    return max(1, math.ceil(constant * math.log(max(n, 2)) / (alpha - 1.0) ** 2))


def sketch_resistances(
    g: Graph,
    alpha: float,
    seed: int | np.random.SeedSequence,
    opts: SolveOptions | None = None,
    constant: float = SKETCH_ROW_CONSTANT,
    allow_disconnected: bool = False,
) -> ResistanceEstimate:
    """Estimate all effective resistances within a multiplicative factor alpha.

    Projects the rows of W^(1/2) B L^+ onto ceil(C*ln(n)/(alpha-1)^2) random
    Gaussian directions; the projected rows are obtained with one block solve
    against the Laplacian. Each edge then satisfies 1/alpha <= est/true <= alpha
    simultaneously with high probability (roughly 1 - 1/n^2 with the default C).
    """
    if alpha <= 1:
        raise ValueError("alpha must be > 1 for sketched resistances")
    if g.m == 0:
        raise ValueError("graph has no edges")
    if not allow_disconnected and not is_connected(g):
        raise ValueError("graph is disconnected: effective resistances undefined")

    rows = sketch_rows(g.n, alpha, constant)
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((rows, g.m)) / math.sqrt(rows)

    b_inc = incidence(g)                              # (m, n)
    scaled = q * np.sqrt(g.weights)[None, :]          # rows of Q W^(1/2)
    y = b_inc.T @ scaled.T                            # (n, rows); columns are in range(L)

    sys = SddSystem(g, laplacian_scale=1.0, diagonal=None)
    sopts = opts or SolveOptions()
    if allow_disconnected:
        sopts = SolveOptions(
            rel_tolerance=sopts.rel_tolerance,
            max_iterations=sopts.max_iterations,
            mode=sopts.mode,
            dense_cap=sopts.dense_cap,
            allow_singular_components=True,
        )
    z = solve(sys, y, sopts)                          # (n, rows) = L^+ Y

    diff = z[g.edges[:, 0], :] - z[g.edges[:, 1], :]  # (m, rows)
    vals = np.einsum("ij,ij->i", diff, diff)
    return ResistanceEstimate(np.maximum(vals, 1e-300), alpha=float(alpha), mode="sketched")


def foster_sum(g: Graph, r: ResistanceEstimate) -> float:
    """Sum of a_e * R_e over all edges; equals n-1 on connected graphs with exact R."""
    if len(r.values) != g.m:
        raise ValueError("resistance estimate does not cover all edges")
    return float(np.dot(g.weights, r.values))
