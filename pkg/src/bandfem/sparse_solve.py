"""Compressed-row matrices and a Jacobi-preconditioned conjugate gradient."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

BREAKDOWN_TOL = 1e-30


class IndefiniteMatrixError(ArithmeticError):
    """CG met a direction with ``p^T A p <= 1e-30 p^T p``."""


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    converged: bool


def csr_from_triplets(rows, cols, vals, n: int) -> sp.csr_matrix:
    """Sum duplicate ``(row, col)`` entries into a canonical CSR matrix
    (sorted column indices, no duplicates, stencil zeros kept)."""
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def matvec(A, x):
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, vector {x.shape}")
    return A @ x


def pcg(A, b, tol: float = 1e-9, maxit: int | None = None, x0=None, precondition: bool = True):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Stops when ``||b - A x|| <= tol ||b||``.  Returns ``(x, SolveReport)``;
    raises :class:`IndefiniteMatrixError` on a non-positive curvature step.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"dimension mismatch: matrix {A.shape}, vector {b.shape}")
    if maxit is None:
        maxit = max(1, int(20 * math.sqrt(n)))
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    if precondition:
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise IndefiniteMatrixError("non-positive diagonal entry")
        inv_diag = 1.0 / diag
    else:
        inv_diag = np.ones(n)

    r = b - A @ x
    rel = np.linalg.norm(r) / bnorm
    if rel <= tol:
        return x, SolveReport(0, rel, True)
    z = inv_diag * r
    rz = r @ z
    p = z.copy()
    for it in range(1, maxit + 1):
        Ap = A @ p
        pAp = p @ Ap
        # relative test: p shrinks with r, so an absolute bound misfires near round-off
        if pAp <= BREAKDOWN_TOL * (p @ p):
            raise IndefiniteMatrixError(f"p^T A p = {pAp:.3e} at iteration {it}: matrix is not SPD")
        step = rz / pAp
        x += step * p
        r -= step * Ap
        rel = np.linalg.norm(r) / bnorm
        if rel <= tol:
            # the recursive residual drifts; confirm with the true one
            r = b - A @ x
            rel = np.linalg.norm(r) / bnorm
            if rel <= tol:
                return x, SolveReport(it, rel, True)
        z = inv_diag * r
        rz_new = r @ z
        if rz_new == 0.0:
            return x, SolveReport(it, 0.0, True)
        if rz_new < 0:
            raise IndefiniteMatrixError("r^T z <= 0: preconditioned residual lost positivity")
        p *= rz_new / rz
        p += z
        rz = rz_new
    return x, SolveReport(maxit, rel, False)
