"""P1 Galerkin assembly of the extended problem on the band.

The bilinear form is ``a(u, v) = int D grad u . grad v + alpha^e u v`` over the
band and the load is ``int f^e v``.  The natural boundary condition adds no
boundary integral.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .band_mesh import BandMesh
from .geometry import BandSpec, diffusion_tensor
from .hessian_recovery import RecoveredField, basis_gradients, clamped_diffusion

CHUNK = 60_000

SurfaceFunction = Callable[[np.ndarray], np.ndarray]


class AssemblyConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExtendedData:
    """Data on the surface; ``alpha`` and ``f`` map surface points ``(m, N)``
    to values ``(m,)`` and are extended along normals when evaluated."""

    alpha: SurfaceFunction
    f: SurfaceFunction


@dataclass(frozen=True, eq=False)
class FemSystem:
    A: sp.csr_matrix
    b: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.b.shape[0]


def extend_data(g: SurfaceFunction, surface, x):
    """Evaluate ``g`` at the closest point of ``x``."""
    x = np.asarray(x, dtype=float)
    p = surface.closest_point(np.atleast_2d(x))
    val = np.asarray(g(p), dtype=float)
    return val[0] if x.ndim == 1 else val


def quadrature(dim: int):
    """Barycentric points ``(q, N+1)`` and weights summing to one; both rules
    integrate quadratics exactly."""
    if dim == 2:
        bary = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        return bary, np.full(3, 1.0 / 3.0)
    if dim == 3:
        a, b = 0.5854101966249685, 0.1381966011250105
        bary = np.full((4, 4), b)
        np.fill_diagonal(bary, a)
        return bary, np.full(4, 0.25)
    raise ValueError(f"unsupported dimension {dim}")


def element_stiffness(vertices, D_q, alpha_q):
    """Local matrix of one simplex.

    ``vertices`` is ``(N+1, N)``; ``D_q`` holds ``(q, N, N)`` tensors and
    ``alpha_q`` ``(q,)`` values at the points of :func:`quadrature`.
    """
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    bary, w = quadrature(dim)
    D_q = np.asarray(D_q, dtype=float).reshape(len(w), dim, dim)
    alpha_q = np.broadcast_to(np.asarray(alpha_q, dtype=float), w.shape)
    J = (vertices[1:] - vertices[0]).T
    det = np.linalg.det(J)
    scale = np.abs(vertices).max() or 1.0
    if abs(det) <= 1e-14 * scale**dim:
        raise ValueError("degenerate simplex")
    vol = abs(det) / (2.0 if dim == 2 else 6.0)
    Jinv = np.linalg.inv(J)
    G = np.vstack([-Jinv.sum(axis=0), Jinv])
    Dbar = np.einsum("q,qab->ab", w, D_q)
    K = vol * G @ Dbar @ G.T
    M = vol * np.einsum("q,qi,qj->ij", w * alpha_q, bary, bary)
    return K + M


def _coefficients(spec: BandSpec, x, bary_cells, mode, recovered):
    """Return ``(phi, H)`` at the quadrature points ``x`` (flattened)."""
    if mode == "exact":
        surf = spec.surface
        return surf.signed_distance(x), surf.hessian(x)
    phi_n, H_n, cells = recovered
    lam = bary_cells  # (m, q, k)
    phi = np.einsum("mqk,mk->mq", lam, phi_n[cells]).ravel()
    H = np.einsum("mqk,mkab->mqab", lam, H_n[cells]).reshape(-1, *H_n.shape[1:])
    return phi, H


def assemble(
    mesh: BandMesh,
    spec: BandSpec,
    data: ExtendedData,
    mode: str = "exact",
    recovered: RecoveredField | None = None,
    chunk: int = CHUNK,
    clamp: bool = True,
) -> FemSystem:
    """Assemble the global system.

    In ``"exact"`` mode ``phi`` and ``H`` come from the analytic surface at
    each quadrature point; in ``"recovered"`` mode the nodal ``phi_h`` and
    ``H_h`` of ``recovered`` are interpolated linearly.  Either way the
    spectrum of ``phi H`` is capped at ``+-1/2`` before forming ``D``.
    ``clamp=False`` skips the cap (diagnostics only; ``D`` must still exist).
    """
    if mode not in ("exact", "recovered"):
        raise AssemblyConfigError(f"unknown hessian mode {mode!r}")
    if mode == "recovered" and recovered is None:
        raise AssemblyConfigError("recovered mode needs a RecoveredField")
    if recovered is not None and recovered.phi.shape[0] != mesh.n_nodes:
        raise AssemblyConfigError("RecoveredField does not match the mesh")

    dim, n = mesh.dim, mesh.n_nodes
    bary, w = quadrature(dim)
    nq, k = bary.shape
    b = np.zeros(n)
    A = sp.csr_matrix((n, n))
    clamped = 0
    eig_lo, eig_hi = np.inf, -np.inf
    ii = np.repeat(np.arange(k), k)
    jj = np.tile(np.arange(k), k)
    mass_ref = np.einsum("q,qi,qj->qij", w, bary, bary)

    for start in range(0, mesh.n_cells, chunk):
        cells = mesh.cells[start : start + chunk]
        m = len(cells)
        G, vol = basis_gradients(mesh.points, cells)
        P = mesh.points[cells]
        xq = np.einsum("qk,mka->mqa", bary, P).reshape(-1, dim)

        rec = None if recovered is None else (recovered.phi, recovered.hessian, cells)
        phi, H = _coefficients(spec, xq, np.broadcast_to(bary, (m, nq, k)), mode, rec)
        if clamp:
            D, active = clamped_diffusion(phi, H)
            clamped += active
        else:
            D = diffusion_tensor(phi, H)
        ev = np.linalg.eigvalsh(D)
        eig_lo, eig_hi = min(eig_lo, ev.min()), max(eig_hi, ev.max())

        pq = spec.surface.closest_point(xq)
        alpha = np.asarray(data.alpha(pq), dtype=float).reshape(m, nq)
        f = np.asarray(data.f(pq), dtype=float).reshape(m, nq)

        Dbar = np.einsum("q,mqab->mab", w, D.reshape(m, nq, dim, dim))
        K = vol[:, None, None] * np.einsum("mia,mab,mjb->mij", G, Dbar, G)
        K += vol[:, None, None] * np.einsum("mq,qij->mij", alpha, mass_ref)
        b += np.bincount(
            cells.ravel(), weights=(vol[:, None] * np.einsum("mq,q,qi->mi", f, w, bary)).ravel(), minlength=n
        )
        rows = cells[:, ii].ravel()
        cols = cells[:, jj].ravel()
        A = A + sp.csr_matrix((K.reshape(m, -1).ravel(), (rows, cols)), shape=(n, n))

    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    # enforce exact symmetry of the stored values
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    meta = {
        "mode": mode,
        "quadrature_points": nq,
        "clamped_points": clamped if clamp else None,
        "d_eig_min": float(eig_lo),
        "d_eig_max": float(eig_hi),
    }
    return FemSystem(A, b, meta)

