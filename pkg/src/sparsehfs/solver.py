"""Linear solves with matrices M = c*L + diag(d): Jacobi-preconditioned CG plus a dense oracle."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph, component_labels, is_connected, laplacian


class SolveFailure(RuntimeError):
    """Iterative solve did not reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolveOptions:
    rel_tolerance: float = 1e-10
    max_iterations: Optional[int] = None  # default max(1000, 20*n)
    mode: str = "iterative"               # "iterative" | "exact-dense"
    dense_cap: int = 2000
    allow_singular_components: bool = False

    def __post_init__(self):
        if self.rel_tolerance <= 0:
            raise ValueError("rel_tolerance must be positive")
        if self.mode not in ("iterative", "exact-dense"):
            raise ValueError(f"unknown solve mode {self.mode!r}")


@dataclass(frozen=True)
class SddSystem:
    """M = laplacian_scale * L(graph) + diag(diagonal); symmetric diagonally dominant PSD."""

    graph: Graph
    laplacian_scale: float = 1.0
    diagonal: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.laplacian_scale < 0:
            raise ValueError("laplacian_scale must be non-negative")
        if self.diagonal is not None:
            d = np.asarray(self.diagonal, dtype=float)
            if d.shape != (self.graph.n,):
                raise ValueError("diagonal length must equal node count")
            if np.any(d < 0):
                raise ValueError("diagonal entries must be non-negative")
            object.__setattr__(self, "diagonal", d)

    @property
    def n(self) -> int:
        return self.graph.n

    def matrix(self) -> sp.csr_matrix:
        m = self.laplacian_scale * laplacian(self.graph)
        if self.diagonal is not None:
            m = m + sp.diags(self.diagonal)
        return sp.csr_matrix(m)

    def kernel_components(self) -> list[np.ndarray]:
        """Index sets spanning Ker(M): components whose diagonal mass is zero."""
        d = self.diagonal
        if self.laplacian_scale == 0:
            if d is None:
                return [np.array([i]) for i in range(self.n)]
            return [np.array([i]) for i in np.flatnonzero(d == 0)]
        ncomp, labels = component_labels(self.graph)
        out = []
        for c in range(ncomp):
            idx = np.flatnonzero(labels == c)
            if d is None or not np.any(d[idx] > 0):
                out.append(idx)
        return out


def _projector(kernel: list[np.ndarray], n: int):
    """Orthogonal projection onto the complement of the span of component indicators."""
    if not kernel:
        return lambda x: x

    def project(x: np.ndarray) -> np.ndarray:
        x = x.copy()
        for idx in kernel:
            x[idx] -= x[idx].mean(axis=0)
        return x

    return project


def _pcg(matvec, b: np.ndarray, inv_diag: np.ndarray, project, tol: float, maxiter: int):
    """Block Jacobi-PCG; returns (x, worst relative residual). b is (n, k)."""
    bnorm = np.linalg.norm(b, axis=0)
    active = bnorm > 0
    x = np.zeros_like(b)
    if not np.any(active):
        return x, 0.0
    scale = np.where(active, bnorm, 1.0)

    r = b.copy()
    z = project(inv_diag[:, None] * r)
    p = z.copy()
    rz = np.sum(r * z, axis=0)
    for it in range(maxiter):
        ap = matvec(p)
        pap = np.sum(p * ap, axis=0)
        safe = pap > 0
        alpha = np.where(safe, rz / np.where(safe, pap, 1.0), 0.0)
        x += alpha * p
        r -= alpha * ap
        if (it + 1) % 50 == 0:
            r = b - matvec(x)  # periodic refresh against recurrence drift
        res = np.linalg.norm(r, axis=0) / scale
        if np.all(res[active] <= tol):
            r = b - matvec(x)
            res = np.linalg.norm(r, axis=0) / scale
            if np.all(res[active] <= tol):
                return x, float(res[active].max())
        z = project(inv_diag[:, None] * r)
        rz_new = np.sum(r * z, axis=0)
        beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = rz_new
    r = b - matvec(x)
    res = np.linalg.norm(r, axis=0) / scale
    worst = float(res[active].max())
    if worst <= tol:
        return x, worst
    raise SolveFailure(f"no convergence in {maxiter} iterations", worst)


def solve(system: SddSystem, b: np.ndarray, opts: SolveOptions | None = None) -> np.ndarray:
    """Solve M x = b to ||Mx-b||/||b|| <= rel_tolerance.

    For singular M (pure Laplacian of a connected graph) b is projected onto
    the complement of the all-ones direction and the mean-zero minimum-norm
    solution is returned. Accepts b of shape (n,) or (n, k) for block solves.
    """
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    bmat = b[:, None] if single else b
    n = system.n
    if bmat.shape[0] != n:
        raise ValueError(f"b has length {bmat.shape[0]}, expected {n}")

    kernel = system.kernel_components()
    if kernel and not opts.allow_singular_components:
        diag_zero = system.diagonal is None or not np.any(system.diagonal > 0)
        if diag_zero and not is_connected(system.graph):
            raise ValueError("disconnected graph with zero diagonal: system is singular")
        if sum(len(idx) for idx in kernel) < n and len(kernel) >= 1 and not diag_zero:
            raise ValueError(
                "singular system: some component has no diagonal support "
                "(pass allow_singular_components to project)"
            )
    project = _projector(kernel, n)

    if opts.mode == "exact-dense":
        if n > opts.dense_cap:
            raise ValueError(f"exact-dense mode capped at n <= {opts.dense_cap}")
        return _solve_dense(system, bmat, project, bool(kernel), opts, single)

    mat = system.matrix()
    diag = mat.diagonal()
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
    maxiter = opts.max_iterations or max(1000, 20 * n)
    x, _ = _pcg(mat.dot, project(bmat), inv_diag, project, opts.rel_tolerance, maxiter)
    x = project(x)
    return x[:, 0] if single else x


def _solve_dense(system, bmat, project, singular, opts, single):
    mat = system.matrix().toarray()
    bproj = project(bmat)
    if singular:
        x = np.linalg.lstsq(mat, bproj, rcond=None)[0]
        x = project(x)
    else:
        x = np.linalg.solve(mat, bproj)
        # one refinement step keeps ill-conditioned solves inside the contract
        x += np.linalg.solve(mat, bproj - mat @ x)
    scale = np.linalg.norm(bproj, axis=0)
    active = scale > 0
    if np.any(active):
        res = np.linalg.norm(mat @ x - bproj, axis=0)[active] / scale[active]
        worst = float(res.max())
        if worst > opts.rel_tolerance:
            raise SolveFailure("dense solve outside tolerance", worst)
    return x[:, 0] if single else x


def apply_pseudoinverse_dense(g: Graph, b: np.ndarray, dense_cap: int = 2000) -> np.ndarray:
    """Exact L^+ b via dense eigendecomposition; the oracle for iterative solves.

    Requires a connected graph with n <= dense_cap. The zero eigenvalue is
    excluded, so the result is the minimum-norm (mean-zero) solution.
    """
    if g.n > dense_cap:
        raise ValueError(f"dense pseudoinverse capped at n <= {dense_cap}")
    if not is_connected(g):
        raise ValueError("graph is disconnected: pseudoinverse oracle requires one component")
    lap = laplacian(g).toarray()
    vals, vecs = np.linalg.eigh(lap)
    # connected: exactly one zero eigenvalue, first after ascending sort
    inv = np.zeros_like(vals)
    inv[1:] = 1.0 / vals[1:]
    b = np.asarray(b, dtype=float)
    return vecs @ (inv[:, None] * (vecs.T @ b)) if b.ndim > 1 else vecs @ (inv * (vecs.T @ b))


def laplacian_pseudoinverse_dense(g: Graph, dense_cap: int = 2000) -> np.ndarray:
    """Dense L^+ matrix for small connected graphs (test/resistance oracle)."""
    if g.n > dense_cap:
        raise ValueError(f"dense pseudoinverse capped at n <= {dense_cap}")
    if not is_connected(g):
        raise ValueError("graph is disconnected: pseudoinverse oracle requires one component")
    lap = laplacian(g).toarray()
    vals, vecs = np.linalg.eigh(lap)
    inv = np.zeros_like(vals)
    inv[1:] = 1.0 / vals[1:]
    return (vecs * inv) @ vecs.T
