"""Discrete surface extraction, surface error norms and convergence orders."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .band_mesh import BandMesh
from .hessian_recovery import basis_gradients

ZERO_SHIFT = 1e-12
CSV_COLUMNS = ("level", "dofs", "h", "L2", "L2_order", "Cnorm", "Cnorm_order", "normal_deriv", "iters")


class SurfaceExtractionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Facets of the zero level set of a P1 field.

    ``vertices`` is ``(F, N, N)`` (facet vertex coordinates), ``bary`` the
    ``(F, N, N+1)`` barycentric coordinates of those vertices in the parent
    element and ``parent`` the ``(F,)`` parent element index.
    """

    vertices: np.ndarray
    bary: np.ndarray
    parent: np.ndarray

    @property
    def n_facets(self) -> int:
        return len(self.parent)

    def measures(self) -> np.ndarray:
        v = self.vertices
        if v.shape[1] == 2:
            return np.linalg.norm(v[:, 1] - v[:, 0], axis=1)
        return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)

    def measure(self) -> float:
        return float(self.measures().sum())

    def normals(self) -> np.ndarray:
        """Unnormalised facet normals following the vertex orientation."""
        v = self.vertices
        if v.shape[1] == 2:
            t = v[:, 1] - v[:, 0]
            return np.stack([t[:, 1], -t[:, 0]], axis=1)
        return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])


def _crossing(phi, cells, ei, ej):
    """Barycentric coordinates of the zero on edge ``(ei, ej)``  of each cell,
    with ``ei``/``ej`` local vertex indices per cell."""
    m = len(cells)
    r = np.arange(m)
    pi = phi[cells[r, ei]]
    pj = phi[cells[r, ej]]
    t = pi / (pi - pj)
    lam = np.zeros((m, cells.shape[1]))
    lam[r, ei] = 1.0 - t
    lam[r, ej] = t
    return lam


def extract_surface(mesh: BandMesh, phi_nodes) -> SurfaceMesh:
    """Marching triangles / tetrahedra on the nodal field ``phi_nodes``.

    Exact zeros are shifted by ``+1e-12 h``.  Facets are oriented so their
    normal points along the element gradient of ``phi_h``.
    """
    phi = np.array(phi_nodes, dtype=float)
    phi[phi == 0.0] = ZERO_SHIFT * mesh.h_max
    cells = mesh.cells
    neg = phi[cells] < 0
    nneg = neg.sum(axis=1)
    k = cells.shape[1]
    cut = np.flatnonzero((nneg > 0) & (nneg < k))
    if len(cut) == 0:
        raise SurfaceExtractionError("phi_h has no sign change on the mesh")

    parents, barys = [], []
    if mesh.dim == 2:
        c = cells[cut]
        ng = neg[cut]
        iso_neg = ng.sum(axis=1) == 1
        iso = np.where(iso_neg[:, None], ng, ~ng)
        v = np.argmax(iso, axis=1)
        a, b = (v + 1) % 3, (v + 2) % 3
        lam = np.stack([_crossing(phi, c, v, a), _crossing(phi, c, v, b)], axis=1)
        parents.append(cut)
        barys.append(lam)
    else:
        for count in (1, 3):
            sel = cut[nneg[cut] == count]
            if len(sel) == 0:
                continue
            c = cells[sel]
            iso = neg[sel] if count == 1 else ~neg[sel]
            v = np.argmax(iso, axis=1)
            o = [(v + s) % 4 for s in (1, 2, 3)]
            lam = np.stack([_crossing(phi, c, v, oi) for oi in o], axis=1)
            parents.append(sel)
            barys.append(lam)
        sel = cut[nneg[cut] == 2]
        if len(sel) > 0:
            c = cells[sel]
            order = np.argsort(~neg[sel], axis=1, kind="stable")  # negatives first
            na, nb, pc, pd = order.T
            quad = np.stack(
                [_crossing(phi, c, na, pc), _crossing(phi, c, na, pd), _crossing(phi, c, nb, pd), _crossing(phi, c, nb, pc)],
                axis=1,
            )
            X = np.einsum("fvk,fka->fva", quad, mesh.points[c])
            d02 = np.linalg.norm(X[:, 0] - X[:, 2], axis=1)
            d13 = np.linalg.norm(X[:, 1] - X[:, 3], axis=1)
            use02 = d02 <= d13
            t1 = np.where(use02[:, None], np.array([0, 1, 2]), np.array([0, 1, 3]))
            t2 = np.where(use02[:, None], np.array([0, 2, 3]), np.array([1, 2, 3]))
            r = np.arange(len(sel))[:, None]
            parents += [sel, sel]
            barys += [quad[r, t1], quad[r, t2]]

    parent = np.concatenate(parents)
    bary = np.concatenate(barys)
    vertices = np.einsum("fvk,fka->fva", bary, mesh.points[cells[parent]])
    surf = SurfaceMesh(vertices, bary, parent)

    # orient by grad phi_h
    G, _ = basis_gradients(mesh.points, cells[parent])
    grad = np.einsum("fk,fka->fa", phi[cells[parent]], G)
    flip = np.einsum("fa,fa->f", surf.normals(), grad) < 0
    if np.any(flip):
        vertices[flip] = vertices[flip][:, ::-1]
        bary[flip] = bary[flip][:, ::-1]
    return SurfaceMesh(vertices, bary, parent)


def facet_quadrature(dim: int, order: int | None = None):
    """Barycentric points ``(q, N)`` on a facet and weights summing to one.

    Segments use ``order``-point Gauss (default 2); triangles use the
    edge-midpoint rule (default) or a 6-point degree-4 rule.
    """
    if dim == 2:
        n = 2 if order is None else order
        x, w = np.polynomial.legendre.leggauss(n)
        t = 0.5 * (x + 1.0)
        return np.stack([1.0 - t, t], axis=1), 0.5 * w
    if order is None or order <= 3:
        return np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]), np.full(3, 1.0 / 3.0)
    a, b = 0.445948490915965, 0.091576213509771
    pts = np.array(
        [[a, a, 1 - 2 * a], [a, 1 - 2 * a, a], [1 - 2 * a, a, a], [b, b, 1 - 2 * b], [b, 1 - 2 * b, b], [1 - 2 * b, b, b]]
    )
    w = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)
    return pts, w


def _pointwise_error(u_h, u_exact, gamma: SurfaceMesh, mesh: BandMesh, surface, order=None):
    """Signed errors ``(F, q)`` at facet quadrature points and the weights."""
    fb, w = facet_quadrature(mesh.dim, order)
    lam = np.einsum("qv,fvk->fqk", fb, gamma.bary)
    uh = np.einsum("fqk,fk->fq", lam, np.asarray(u_h)[mesh.cells[gamma.parent]])
    xq = np.einsum("qv,fva->fqa", fb, gamma.vertices).reshape(-1, mesh.dim)
    ue = np.asarray(u_exact(surface.closest_point(xq))).reshape(uh.shape)
    return uh - ue, w


def surface_l2_error(u_h, u_exact, gamma: SurfaceMesh, mesh: BandMesh, surface, order=None) -> float:
    """``L2(Gamma_h)`` norm of ``u_h - u_exact o p``; ``u_exact`` maps surface
    points ``(m, N)`` to values."""
    if gamma.parent.min(initial=0) < 0 or gamma.parent.max(initial=-1) >= mesh.n_cells:
        raise SurfaceExtractionError("facet without a valid parent element")
    e, w = _pointwise_error(u_h, u_exact, gamma, mesh, surface, order)
    return float(math.sqrt(np.sum(gamma.measures() * (e**2 @ w))))


def surface_max_error(u_h, u_exact, gamma: SurfaceMesh, mesh: BandMesh, surface) -> float:
    """C-norm: max over facet quadrature points and facet vertices."""
    e, _ = _pointwise_error(u_h, u_exact, gamma, mesh, surface)
    uh_v = np.einsum("fvk,fk->fv", gamma.bary, np.asarray(u_h)[mesh.cells[gamma.parent]])
    pv = surface.closest_point(gamma.vertices.reshape(-1, mesh.dim))
    ev = uh_v - np.asarray(u_exact(pv)).reshape(uh_v.shape)
    return float(max(np.abs(e).max(), np.abs(ev).max()))


def facet_errors(u_h, u_exact, gamma: SurfaceMesh, mesh: BandMesh, surface) -> np.ndarray:
    """Mean ``|u_h - u_exact o p|`` on each facet."""
    e, w = _pointwise_error(u_h, u_exact, gamma, mesh, surface)
    return np.abs(e) @ w


def error_by_gauss_sign(u_h, u_exact, gamma: SurfaceMesh, mesh: BandMesh, surface):
    """Area-weighted mean facet error over facets whose centroid projects to
    negative and to positive Gauss curvature, as ``(neg, pos)``."""
    err = facet_errors(u_h, u_exact, gamma, mesh, surface)
    area = gamma.measures()
    K = surface.gauss_curvature(surface.closest_point(gamma.vertices.mean(axis=1)))
    out = []
    for mask in (K < 0, K > 0):
        a = area[mask].sum()
        out.append(float(np.nan if a == 0 else (err[mask] * area[mask]).sum() / a))
    return tuple(out)


def normal_derivative_norm(u_h, mesh: BandMesh, surface) -> float:
    """``sqrt(sum_T |T| (n(x_T) . grad u_h|_T)^2)`` with ``x_T`` the barycentre."""
    G, vol = basis_gradients(mesh.points, mesh.cells)
    grad = np.einsum("mk,mka->ma", np.asarray(u_h)[mesh.cells], G)
    n = surface.normal(mesh.points[mesh.cells].mean(axis=1))
    return float(math.sqrt(np.sum(vol * np.einsum("ma,ma->m", n, grad) ** 2)))


def convergence_order(err_prev, err_cur, dof_prev, dof_cur, dim: int):
    """``N log(e_prev/e_cur) / log(dof_cur/dof_prev)``; ``None`` if undefined."""
    vals = (err_prev, err_cur, dof_prev, dof_cur)
    if any(v is None or not np.isfinite(v) or v <= 0 for v in vals) or dof_cur <= dof_prev:
        return None
    return dim * math.log(err_prev / err_cur) / math.log(dof_cur / dof_prev)


@dataclass
class SurfaceErrorReport:
    level: int
    dofs: int
    h: float
    L2: float
    Cnorm: float
    normal_deriv: float
    iters: int
    L2_order: float | None = None
    Cnorm_order: float | None = None
    converged: bool = True

    def row(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


def attach_orders(reports, dim: int):
    """Fill in ``L2_order`` and ``Cnorm_order`` from consecutive reports."""
    for prev, cur in zip(reports, reports[1:]):
        cur.L2_order = convergence_order(prev.L2, cur.L2, prev.dofs, cur.dofs, dim)
        cur.Cnorm_order = convergence_order(prev.Cnorm, cur.Cnorm, prev.dofs, cur.dofs, dim)
    return reports


__all__ = [
    "CSV_COLUMNS",
    "SurfaceErrorReport",
    "SurfaceExtractionError",
    "SurfaceMesh",
    "attach_orders",
    "convergence_order",
    "error_by_gauss_sign",
    "extract_surface",
    "facet_errors",
    "facet_quadrature",
    "normal_derivative_norm",
    "surface_l2_error",
    "surface_max_error",
]
