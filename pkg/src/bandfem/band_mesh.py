"""Simplicial meshes of the narrow band ``{|phi| < d}``.

Two generators are provided: a background Cartesian grid split into
triangles / Kuhn tetrahedra with boundary snapping (any dimension, any
surface), and a structured polar annulus for the circle.  Meshes are
refined regularly (red refinement; Bey's ordering in 3D) with boundary
midpoints snapped back onto ``|phi| = d``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import BandSpec, Circle, Sphere, Torus

log = logging.getLogger(__name__)

SNAP_TOL = 1e-10
MAX_SNAP_SWEEPS = 20
SMOOTH_SWEEPS = 5

# local edge numbering used by refine(); the midpoint of edge k is local
# node N+1+k of the parent
_EDGES = {
    2: [(0, 1), (1, 2), (0, 2)],
    3: [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
}
_CHILDREN = {
    # 3: m01, 4: m12, 5: m02
    2: [(0, 3, 5), (3, 1, 4), (5, 4, 2), (3, 4, 5)],
    # 4: m01, 5: m02, 6: m03, 7: m12, 8: m13, 9: m23  (Bey)
    3: [
        (0, 4, 5, 6), (4, 1, 7, 8), (5, 7, 2, 9), (6, 8, 9, 3),
        (4, 5, 6, 8), (4, 5, 7, 8), (5, 6, 8, 9), (5, 7, 8, 9),
    ],
}


class MeshConfigurationError(ValueError):
    """Mesh parameters incompatible with the band."""


@dataclass(frozen=True, eq=False)
class BandMesh:
    points: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    level: int = 0
    discarded: int = 0
    kind: str = "cartesian"

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def volumes(self) -> np.ndarray:
        return simplex_volumes(self.points, self.cells)

    def diameters(self) -> np.ndarray:
        return simplex_diameters(self.points, self.cells)

    @property
    def h_max(self) -> float:
        return float(self.diameters().max())

    def boundary_faces(self) -> np.ndarray:
        return boundary_faces(self.cells, self.n_nodes)


@dataclass(frozen=True)
class MeshQuality:
    beta: float
    h_min: float
    h_max: float
    n_cut: int
    n_cells: int
    n_nodes: int


# --------------------------------------------------------------------------
# simplex measures
# --------------------------------------------------------------------------

def simplex_volumes(points, cells):
    """Signed simplex volumes (positive for counter-clockwise ordering)."""
    P = points[cells]
    J = P[:, 1:] - P[:, :1]
    dim = points.shape[1]
    return np.linalg.det(J) / math.factorial(dim)


def simplex_diameters(points, cells):
    P = points[cells]
    k = cells.shape[1]
    best = np.zeros(len(cells))
    for i, j in itertools.combinations(range(k), 2):
        best = np.maximum(best, np.linalg.norm(P[:, i] - P[:, j], axis=1))
    return best


def _facet_measures(points, cells):
    """Area of every facet opposite each vertex, shape ``(m, N+1)``."""
    P = points[cells]
    dim = points.shape[1]
    out = np.empty(cells.shape)
    for i in range(dim + 1):
        Q = np.delete(P, i, axis=1)
        if dim == 2:
            out[:, i] = np.linalg.norm(Q[:, 1] - Q[:, 0], axis=1)
        else:
            out[:, i] = 0.5 * np.linalg.norm(np.cross(Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 0]), axis=1)
    return out


def inscribed_diameter(points, cells):
    """Diameter of the inscribed ball: ``2 N |T| / |dT|``."""
    vol = np.abs(simplex_volumes(points, cells))
    surf = _facet_measures(points, cells).sum(axis=1)
    dim = points.shape[1]
    return 2.0 * dim * vol / surf


# --------------------------------------------------------------------------
# topology helpers
# --------------------------------------------------------------------------

def _face_keys(faces, n):
    f = np.sort(faces, axis=1).astype(np.int64)
    key = f[:, 0]
    for j in range(1, f.shape[1]):
        key = key * n + f[:, j]
    return key


def all_faces(cells):
    """Facets of every cell, shape ``(m*(N+1), N)``; facet i omits vertex i."""
    k = cells.shape[1]
    return np.concatenate([np.delete(cells, i, axis=1) for i in range(k)])


def boundary_faces(cells, n_nodes):
    """Facets shared by exactly one cell."""
    faces = all_faces(cells)
    keys = _face_keys(faces, n_nodes)
    _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    return faces[counts[inv] == 1]


def interior_face_counts(cells, n_nodes):
    """Histogram ``{multiplicity: number of distinct facets}``."""
    keys = _face_keys(all_faces(cells), n_nodes)
    _, counts = np.unique(keys, return_counts=True)
    vals, freq = np.unique(counts, return_counts=True)
    return dict(zip(vals.tolist(), freq.tolist()))


def unique_edges(cells, n_nodes):
    """Unique edges and the map ``(cell, local edge) -> edge id``."""
    dim = cells.shape[1] - 1
    pairs = np.array(_EDGES[dim])
    e = cells[:, pairs]  # (m, n_local_edges, 2)
    e = np.sort(e.reshape(-1, 2), axis=1)
    keys = e[:, 0].astype(np.int64) * n_nodes + e[:, 1]
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    return e[first], inv.reshape(len(cells), len(pairs))


def _compact(points, cells, boundary):
    used = np.zeros(len(points), dtype=bool)
    used[cells.ravel()] = True
    new_id = np.cumsum(used) - 1
    return points[used], new_id[cells], boundary[used]


def _orient(points, cells):
    """Make every simplex positively oriented (vertex swap 0<->2 keeps the
    Bey refinement geometry, so it is used for tetrahedra too)."""
    vol = simplex_volumes(points, cells)
    neg = vol < 0
    if np.any(neg):
        cells = cells.copy()
        a, b = (0, 2) if cells.shape[1] == 4 else (1, 2)
        cells[neg, a], cells[neg, b] = cells[neg, b], cells[neg, a].copy()
    return cells


# --------------------------------------------------------------------------
# snapping
# --------------------------------------------------------------------------

def snap_to_band(spec: BandSpec, x, side=None):
    """Move points along the normal onto ``phi = side * d``."""
    surf = spec.surface
    phi = surf.signed_distance(x)
    n = surf.normal(x)
    if side is None:
        side = np.where(phi >= 0, 1.0, -1.0)
    return x - (phi - side * spec.d)[:, None] * n


def _min_volume(h, dim):
    return 1e-14 * h**dim


def _snap_boundary(spec, points, cells, h):
    """Snap every node on a boundary facet onto ``|phi| = d``, discarding
    elements inverted by the motion, until the boundary is stable."""
    boundary = np.zeros(len(points), dtype=bool)
    discarded = 0
    for _ in range(MAX_SNAP_SWEEPS):
        faces = boundary_faces(cells, len(points))
        on_bdry = np.zeros(len(points), dtype=bool)
        on_bdry[faces.ravel()] = True
        todo = on_bdry & ~boundary
        if np.any(todo):
            points = points.copy()
            points[todo] = snap_to_band(spec, points[todo])
            boundary |= todo
        # interior nodes pushed outside the band by neighbouring snaps
        phi = spec.surface.phi_unchecked(points)
        stray = ~boundary & (np.abs(phi) >= spec.d - SNAP_TOL)
        bad = simplex_volumes(points, cells) <= _min_volume(h, points.shape[1])
        bad |= stray[cells].any(axis=1)
        if not np.any(todo) and not np.any(bad):
            break
        if np.any(bad):
            discarded += int(bad.sum())
            cells = cells[~bad]
            # nodes of removed cells may now be exposed; recheck next sweep
            live = np.zeros(len(points), dtype=bool)
            live[cells.ravel()] = True
            boundary &= live
    else:
        raise MeshConfigurationError("boundary snapping did not stabilise")
    points, cells, boundary = _compact(points, cells, boundary)
    return points, cells, boundary, discarded


def _neighbours(edges, n):
    from scipy.sparse import coo_matrix

    i, j = edges[:, 0], edges[:, 1]
    A = coo_matrix((np.ones(2 * len(i)), (np.r_[i, j], np.r_[j, i])), shape=(n, n)).tocsr()
    A.data[:] = 1.0
    return A


def _smooth(spec, points, cells, boundary, h, sweeps=SMOOTH_SWEEPS):
    """Laplacian smoothing; boundary nodes slide along their level set.

    On the uniform part of the grid the neighbour average is the node itself,
    so only the snapped layer moves.  Moves that would invert an element are
    undone node by node.
    """
    n, dim = points.shape
    edges, _ = unique_edges(cells, n)
    A = _neighbours(edges, n)
    bfaces = boundary_faces(cells, n)
    bedges = np.concatenate([bfaces[:, [a, b]] for a, b in itertools.combinations(range(dim), 2)])
    B = _neighbours(bedges, n)
    deg = np.asarray(A.sum(axis=1)).ravel()
    bdeg = np.asarray(B.sum(axis=1)).ravel()
    vmin = _min_volume(h, dim)
    ref_vol = np.abs(simplex_volumes(points, cells))
    for _ in range(sweeps):
        new = points.copy()
        inner = ~boundary & (deg > 0)
        new[inner] = (A @ points)[inner] / deg[inner, None]
        bmove = boundary & (bdeg > 0)
        if np.any(bmove):
            new[bmove] = (B @ points)[bmove] / bdeg[bmove, None]
            side = np.sign(spec.surface.phi_unchecked(points[bmove]))
            new[bmove] = snap_to_band(spec, new[bmove], side)
        moved = np.ones(n, dtype=bool)
        for _ in range(50):
            vol = simplex_volumes(new, cells)
            bad = (vol <= np.maximum(vmin, 0.05 * ref_vol))
            if not np.any(bad):
                break
            revert = np.zeros(n, dtype=bool)
            revert[cells[bad].ravel()] = True
            revert &= moved
            if not np.any(revert):
                break
            new[revert] = points[revert]
            moved &= ~revert
        points = new
    return points


def _pull_inside(spec, points, boundary):
    """Reflect unflagged nodes lying on or beyond ``|phi| = d`` (chord
    midpoints near a concave boundary) back into the band."""
    phi = spec.surface.phi_unchecked(points)
    stray = ~boundary & (np.abs(phi) >= spec.d - SNAP_TOL)
    if np.any(stray):
        x = points[stray]
        excess = np.abs(phi[stray]) - spec.d
        target = np.sign(phi[stray]) * (spec.d - np.maximum(excess, SNAP_TOL) - SNAP_TOL)
        points = points.copy()
        points[stray] = x - (phi[stray] - target)[:, None] * spec.surface.normal(x)
    return points


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def _kuhn_offsets(dim):
    """Vertex offsets of the simplices splitting the unit cube."""
    out = []
    for perm in itertools.permutations(range(dim)):
        v = np.zeros(dim, dtype=int)
        path = [v.copy()]
        for ax in perm:
            v[ax] = 1
            path.append(v.copy())
        out.append(path)
    return np.array(out)  # (dim!, dim+1, dim)


def _check_h(spec, h):
    if not h > 0:
        raise MeshConfigurationError("mesh size must be positive")
    if h > spec.d:
        raise MeshConfigurationError(
            f"h={h} leaves fewer than two element layers across the band of width {2 * spec.d}"
        )


def build_band_mesh(spec: BandSpec, h: float, kind: str = "cartesian") -> BandMesh:
    """Mesh the band with elements of size about ``h``.

    ``kind="cartesian"`` keeps the simplices of a background grid of spacing
    ``h`` whose barycentre lies in the band and snaps every boundary node
    onto ``|phi| = d``.  ``kind="fitted"`` extrudes a surface mesh along the
    normals (``"polar"`` is its circle-only alias).
    """
    _check_h(spec, h)
    if kind == "polar":
        return polar_annulus_mesh(spec, h)
    if kind == "fitted":
        return fitted_band_mesh(spec, h)
    if kind != "cartesian":
        raise MeshConfigurationError(f"unknown mesh kind {kind!r}")

    surf = spec.surface
    dim = surf.dim
    lo, hi = surf.bounding_box(spec.d + 2 * h)
    k_lo = np.floor(lo / h).astype(int)
    k_hi = np.ceil(hi / h).astype(int)
    shape = k_hi - k_lo + 1  # grid nodes per axis

    # candidate cells: centre within reach of the band
    axes = [np.arange(k_lo[a], k_hi[a]) for a in range(dim)]
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    centres = (idx + 0.5) * h
    reach = spec.d + 0.5 * math.sqrt(dim) * h
    idx = idx[np.abs(surf.phi_unchecked(centres)) < reach]

    offsets = _kuhn_offsets(dim)
    corner = idx[:, None, None, :] + offsets[None]  # (cells, simplices, dim+1, dim)
    corner = corner.reshape(-1, dim + 1, dim)
    flat = np.ravel_multi_index(tuple((corner - k_lo).transpose(2, 0, 1)), tuple(shape))
    bary = corner.mean(axis=1) * h
    keep = np.abs(surf.phi_unchecked(bary)) < spec.d
    flat = flat[keep]

    used, cells = np.unique(flat, return_inverse=True)
    cells = cells.reshape(-1, dim + 1)
    grid = np.stack(np.unravel_index(used, tuple(shape)), axis=1) + k_lo
    points = grid.astype(float) * h
    cells = _orient(points, cells)

    points, cells, boundary, discarded = _snap_boundary(spec, points, cells, h)
    points = _smooth(spec, points, cells, boundary, h)
    points = _pull_inside(spec, points, boundary)
    cells = _orient(points, cells)
    if discarded:
        log.info("build_band_mesh: discarded %d elements inverted by snapping", discarded)
    return BandMesh(points, cells, boundary, level=0, discarded=discarded, kind="cartesian")


def polar_annulus_mesh(spec: BandSpec, h: float) -> BandMesh:
    """Rings x sectors mesh of the annulus around a circle."""
    if not isinstance(spec.surface, Circle):
        raise MeshConfigurationError("the polar mesh is only available for the circle")
    return fitted_band_mesh(spec, h)


def surface_mesh(surface, h: float):
    """Quasi-uniform mesh of the surface itself: ``(points, facets)``."""
    if isinstance(surface, Circle):
        n = max(8, math.ceil(2 * math.pi * surface.radius / h))
        t = np.arange(n) * (2 * math.pi / n)
        pts = surface.radius * np.column_stack([np.cos(t), np.sin(t)])
        segs = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
        return pts, segs
    if isinstance(surface, Sphere):
        return _cubed_sphere(surface.radius, max(2, math.ceil(0.5 * math.pi * surface.radius / h)))
    if isinstance(surface, Torus):
        n_tube = max(6, math.ceil(2 * math.pi * surface.minor / h))
        n_ring = max(6, math.ceil(2 * math.pi * surface.major / h))
        tube = np.arange(n_tube) * (2 * math.pi / n_tube)
        az = np.arange(n_ring) * (2 * math.pi / n_ring)
        T, A = np.meshgrid(tube, az, indexing="ij")
        pts = surface.point(T.ravel(), A.ravel())
        i, j = np.meshgrid(np.arange(n_tube), np.arange(n_ring), indexing="ij")
        i, j = i.ravel(), j.ravel()
        ip, jp = (i + 1) % n_tube, (j + 1) % n_ring
        quads = np.stack([i * n_ring + j, ip * n_ring + j, ip * n_ring + jp, i * n_ring + jp], axis=1)
        return pts, _split_quads(pts, quads)
    raise MeshConfigurationError(f"no surface mesher for {type(surface).__name__}")


def _split_quads(points, quads):
    """Split quads ``(a, b, c, d)`` along their shorter diagonal."""
    P = points[quads]
    ac = np.linalg.norm(P[:, 2] - P[:, 0], axis=1)
    bd = np.linalg.norm(P[:, 3] - P[:, 1], axis=1)
    use_ac = ac <= bd
    a, b, c, d = quads.T
    t1 = np.where(use_ac[:, None], np.stack([a, b, c], 1), np.stack([a, b, d], 1))
    t2 = np.where(use_ac[:, None], np.stack([a, c, d], 1), np.stack([b, c, d], 1))
    return np.concatenate([t1, t2])


def _cubed_sphere(radius, n):
    """Equiangular cubed-sphere triangulation with ``n`` cells per cube edge."""
    s = np.tan(np.linspace(-math.pi / 4, math.pi / 4, n + 1))
    U, V = np.meshgrid(s, s, indexing="ij")
    U, V, one = U.ravel(), V.ravel(), np.ones(U.size)
    faces = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            xyz = np.empty((U.size, 3))
            xyz[:, axis] = sign * one
            xyz[:, (axis + 1) % 3] = U
            xyz[:, (axis + 2) % 3] = V
            faces.append(xyz)
    raw = np.concatenate(faces)
    key = np.round(raw, 12)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(first)  # keep first-seen numbering (deterministic)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    pts = raw[first[order]]
    pts = radius * pts / np.linalg.norm(pts, axis=1)[:, None]
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    loc = np.stack([i * (n + 1) + j, (i + 1) * (n + 1) + j, (i + 1) * (n + 1) + j + 1, i * (n + 1) + j + 1], 1)
    quads = np.concatenate([loc + f * (n + 1) ** 2 for f in range(6)])
    quads = rank[inv[quads]]
    return pts, _split_quads(pts, quads)


def _layer_offsets(layers):
    """Layer positions in ``[-1, 1]``: about uniform, with the surface
    exactly one third into the layer that contains it.  One third is not a
    dyadic fraction, so no refinement level places nodes on the surface."""
    if layers < 3:
        raise ValueError("at least three layers are needed")
    width = 2.0 / layers
    a, b = -width / 3.0, 2.0 * width / 3.0
    left = (layers - 1) // 2
    right = layers - 1 - left
    return np.concatenate([np.linspace(-1.0, a, left + 1), np.linspace(b, 1.0, right + 1)])


def fitted_band_mesh(spec: BandSpec, h: float) -> BandMesh:
    """Boundary-fitted band mesh: a surface mesh extruded along the normals
    into ``max(3, ceil(2d/h))`` layers, split into triangles / tetrahedra."""
    surf = spec.surface
    d = spec.d
    base, facets = surface_mesh(surf, h)
    nb = len(base)
    layers = max(3, math.ceil(2 * d / h))
    offsets = d * _layer_offsets(layers)
    normals = surf.normal(base)
    points = np.concatenate([base + t * normals for t in offsets])
    facets = np.sort(facets, axis=1)
    k = np.arange(layers)[:, None, None] * nb
    bot = (facets[None] + k).reshape(-1, facets.shape[1])
    top = bot + nb
    if surf.dim == 2:
        i, j = bot.T
        ip, jp = top.T
        cells = np.concatenate([np.stack([i, j, jp], 1), np.stack([i, jp, ip], 1)])
    else:
        # prism split with diagonals chosen by global vertex order: conforming
        i, j, l = bot.T
        ip, jp, lp = top.T
        cells = np.concatenate([np.stack([i, j, l, ip], 1), np.stack([j, l, ip, jp], 1), np.stack([l, ip, jp, lp], 1)])
    cells = _orient(points, cells)
    boundary = np.zeros(len(points), dtype=bool)
    boundary[:nb] = True
    boundary[-nb:] = True
    return BandMesh(points, cells, boundary, level=0, kind="fitted")


# --------------------------------------------------------------------------
# refinement
# --------------------------------------------------------------------------

def refine(mesh: BandMesh, spec: BandSpec) -> BandMesh:
    """One level of regular refinement with boundary re-snapping."""
    dim = mesh.dim
    n = mesh.n_nodes
    edges, cell_edges = unique_edges(mesh.cells, n)
    mids = 0.5 * (mesh.points[edges[:, 0]] + mesh.points[edges[:, 1]])
    points = np.concatenate([mesh.points, mids])

    # midpoints of boundary-facet edges are new boundary nodes
    bfaces = mesh.boundary_faces()
    if dim == 2:
        bedges = np.sort(bfaces, axis=1)
    else:
        bedges = np.sort(np.concatenate([bfaces[:, [0, 1]], bfaces[:, [1, 2]], bfaces[:, [0, 2]]]), axis=1)
    bkeys = np.unique(bedges[:, 0].astype(np.int64) * n + bedges[:, 1])
    ekeys = edges[:, 0].astype(np.int64) * n + edges[:, 1]
    on_bdry = np.isin(ekeys, bkeys)
    boundary = np.concatenate([mesh.boundary, on_bdry])
    if np.any(boundary):
        points[boundary] = snap_to_band(spec, points[boundary])

    points = _pull_inside(spec, points, boundary)

    local = np.concatenate([mesh.cells, n + cell_edges], axis=1)
    children = np.array(_CHILDREN[dim])
    cells = local[:, children].reshape(-1, dim + 1)
    cells = _orient(points, cells)

    h = mesh.h_max / 2
    bad = np.abs(simplex_volumes(points, cells)) <= _min_volume(h, dim)
    discarded = int(bad.sum())
    if discarded:
        log.info("refine: discarded %d elements inverted by snapping", discarded)
        cells = cells[~bad]
        points, cells, boundary = _compact(points, cells, boundary)
    return BandMesh(points, cells, boundary, level=mesh.level + 1, discarded=discarded, kind=mesh.kind)


# --------------------------------------------------------------------------
# quality
# --------------------------------------------------------------------------

def cut_elements(cells, phi_nodes):
    """Mask of elements whose nodal values change sign or vanish."""
    v = phi_nodes[cells]
    return (v.min(axis=1) <= 0) & (v.max(axis=1) >= 0)


def shape_regularity(mesh: BandMesh, spec: BandSpec) -> MeshQuality:
    """``beta = max diam(T)/rho(T)`` over elements cut by the surface, where
    ``rho`` is the diameter of the inscribed ball."""
    phi = spec.surface.signed_distance(mesh.points)
    cut = cut_elements(mesh.cells, phi)
    cells = mesh.cells[cut]
    diam = simplex_diameters(mesh.points, cells)
    rho = inscribed_diameter(mesh.points, cells)
    return MeshQuality(
        beta=float(np.max(diam / rho)),
        h_min=float(diam.min()),
        h_max=float(diam.max()),
        n_cut=int(cut.sum()),
        n_cells=mesh.n_cells,
        n_nodes=mesh.n_nodes,
    )


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

_VTK_CELL_TYPE = {2: 5, 3: 10}


def write_vtk(path, mesh: BandMesh, point_data: dict | None = None, title: str = "bandfem"):
    """Legacy ASCII VTK unstructured grid with optional nodal scalars."""
    pts = mesh.points
    if mesh.dim == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    k = mesh.cells.shape[1]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        np.savetxt(fh, pts, fmt="%.17g")
        fh.write(f"CELLS {mesh.n_cells} {mesh.n_cells * (k + 1)}\n")
        np.savetxt(fh, np.column_stack([np.full(mesh.n_cells, k), mesh.cells]), fmt="%d")
        fh.write(f"CELL_TYPES {mesh.n_cells}\n")
        np.savetxt(fh, np.full(mesh.n_cells, _VTK_CELL_TYPE[mesh.dim]), fmt="%d")
        if point_data:
            fh.write(f"POINT_DATA {len(pts)}\n")
            for name, values in point_data.items():
                fh.write(f"SCALARS {name} double 1\n")
                fh.write("LOOKUP_TABLE default\n")
                np.savetxt(fh, np.asarray(values, dtype=float), fmt="%.17g")
