"""Nodal level-set interpolation, Hessian recovery and the band clamp."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .band_mesh import BandMesh, simplex_volumes

CLAMP_LIMIT = 0.5


@dataclass(frozen=True, eq=False)
class RecoveredField:
    phi: np.ndarray  # (n,)
    hessian: np.ndarray  # (n, N, N)
    source: str = "recovered"


def interpolate_phi(mesh: BandMesh, surface) -> np.ndarray:
    """Nodal values of the signed distance (P1 Lagrange interpolant)."""
    return surface.signed_distance(mesh.points)


def basis_gradients(points, cells):
    """Gradients of the P1 barycentric basis, shape ``(m, N+1, N)``, and the
    element volumes."""
    P = points[cells]
    J = np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)  # columns are edge vectors
    Jinv = np.linalg.inv(J)  # rows are gradients of lambda_1..lambda_N
    G = np.empty(cells.shape + (points.shape[1],))
    G[:, 1:] = Jinv
    G[:, 0] = -Jinv.sum(axis=1)
    return G, np.abs(simplex_volumes(points, cells))


def _lumped_average(cells, vol, per_cell, n):
    """Volume-weighted nodal average of piecewise-constant data."""
    k = cells.shape[1]
    w = np.bincount(cells.ravel(), weights=np.repeat(vol, k), minlength=n)
    if np.any(w == 0):
        raise ValueError("mesh has nodes without incident elements")
    flat = per_cell.reshape(len(cells), -1)
    out = np.empty((n, flat.shape[1]))
    for c in range(flat.shape[1]):
        out[:, c] = np.bincount(cells.ravel(), weights=np.repeat(vol * flat[:, c], k), minlength=n)
    return (out / w[:, None]).reshape((n,) + per_cell.shape[1:])


def recover_gradient(mesh: BandMesh, values, G=None, vol=None):
    if G is None:
        G, vol = basis_gradients(mesh.points, mesh.cells)
    grads = np.einsum("mi,mia->ma", values[mesh.cells], G)
    return _lumped_average(mesh.cells, vol, grads, mesh.n_nodes)


def recover_hessian(mesh: BandMesh, phi_nodes) -> np.ndarray:
    """Double lumped-L2 gradient recovery of a nodal scalar field.

    The element gradients of ``phi_h`` are averaged to the nodes with volume
    weights, the same is done for the element Jacobians of that nodal
    gradient, and the result is symmetrised.
    """
    G, vol = basis_gradients(mesh.points, mesh.cells)
    g = recover_gradient(mesh, np.asarray(phi_nodes, dtype=float), G, vol)
    # dg_a/dx_b on every element
    jac = np.einsum("mia,mib->mab", g[mesh.cells], G)
    H = _lumped_average(mesh.cells, vol, jac, mesh.n_nodes)
    return 0.5 * (H + np.swapaxes(H, 1, 2))


def recover_field(mesh: BandMesh, surface) -> RecoveredField:
    phi = interpolate_phi(mesh, surface)
    return RecoveredField(phi, recover_hessian(mesh, phi))


def clamp(phi, H):
    """Cap the spectrum of ``phi * H`` at ``+-1/2`` and return the
    corresponding Hessian (unchanged where the cap is inactive)."""
    H = np.asarray(H, dtype=float)
    phi = np.asarray(phi, dtype=float)
    single = H.ndim == 2
    Hb = H[None] if single else H
    phib = np.broadcast_to(phi, Hb.shape[:1])
    out = Hb.copy()
    nz = phib != 0
    if np.any(nz):
        lam, V = np.linalg.eigh(phib[nz, None, None] * Hb[nz])
        over = np.abs(lam) > CLAMP_LIMIT
        rows = over.any(axis=1)
        if np.any(rows):
            lam = np.clip(lam, -CLAMP_LIMIT, CLAMP_LIMIT)
            fixed = np.einsum("mik,mk,mjk->mij", V, lam, V) / phib[nz, None, None]
            idx = np.flatnonzero(nz)[rows]
            out[idx] = fixed[rows]
    return out[0] if single else out


def clamped_diffusion(phi, H):
    """``(I - phi H)^-2`` with the spectrum of ``phi H`` capped at ``+-1/2``.

    Batch version used by the assembler; returns the tensors and the number
    of points where the cap was active.
    """
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    lam, V = np.linalg.eigh(phi[:, None, None] * H)
    active = int(np.count_nonzero(np.abs(lam).max(axis=1) > CLAMP_LIMIT))
    lam = np.clip(lam, -CLAMP_LIMIT, CLAMP_LIMIT)
    D = np.einsum("mik,mk,mjk->mij", V, (1.0 - lam) ** -2, V)
    return D, active
