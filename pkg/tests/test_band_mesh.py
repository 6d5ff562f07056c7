import math

import numpy as np
import numpy.testing as npt
import pytest

from bandfem.band_mesh import (
    BandMesh,
    MeshConfigurationError,
    _kuhn_offsets,
    _layer_offsets,
    build_band_mesh,
    cut_elements,
    inscribed_diameter,
    interior_face_counts,
    refine,
    shape_regularity,
    simplex_diameters,
    simplex_volumes,
    write_vtk,
)
from bandfem.geometry import BandSpec, Circle, Sphere, Torus

CIRCLE = BandSpec(Circle(), 0.05)
SPHERE = BandSpec(Sphere(), 0.1)
TORUS = BandSpec(Torus(1.0, 0.6), 0.1)


def _beta(points, cells):
    return simplex_diameters(points, cells) / inscribed_diameter(points, cells)


def _check_mesh(mesh, spec):
    surf = spec.surface
    assert np.all(simplex_volumes(mesh.points, mesh.cells) > 0)
    counts = interior_face_counts(mesh.cells, mesh.n_nodes)
    assert set(counts) <= {1, 2}
    phi = surf.signed_distance(mesh.points)
    npt.assert_allclose(np.abs(phi[mesh.boundary]), spec.d, atol=1e-10)
    assert np.all(np.abs(phi[~mesh.boundary]) < spec.d)
    # topological boundary is made of flagged nodes only
    assert np.all(mesh.boundary[mesh.boundary_faces()])


class TestCartesian:
    def test_circle_node_count(self):
        mesh = build_band_mesh(CIRCLE, 0.05)
        estimate = 2 * math.pi * (0.05 / 0.05 + 1) / 0.05
        assert 0.5 * estimate <= mesh.n_nodes <= 2 * estimate
        assert mesh.n_nodes == 386  # regression value

    def test_cube_split(self):
        assert _kuhn_offsets(2).shape == (2, 3, 2)
        assert _kuhn_offsets(3).shape == (6, 4, 3)

    def test_circle_valid(self):
        _check_mesh(build_band_mesh(CIRCLE, 0.05), CIRCLE)

    def test_sphere_snapped(self):
        mesh = build_band_mesh(SPHERE, 0.05)
        r = np.linalg.norm(mesh.points[mesh.boundary], axis=1)
        npt.assert_allclose(np.abs(r - 1.0), 0.1, atol=1e-10)
        _check_mesh(mesh, SPHERE)

    def test_h_too_large(self):
        with pytest.raises(MeshConfigurationError):
            build_band_mesh(CIRCLE, 0.2)
        with pytest.raises(MeshConfigurationError):
            build_band_mesh(CIRCLE, -0.01)

    def test_unknown_kind(self):
        with pytest.raises(MeshConfigurationError):
            build_band_mesh(CIRCLE, 0.05, kind="voronoi")

    def test_polar_only_for_circle(self):
        with pytest.raises(MeshConfigurationError):
            build_band_mesh(SPHERE, 0.1, kind="polar")


class TestFitted:
    @pytest.mark.parametrize("spec,h,kind", [(CIRCLE, 0.04, "polar"), (SPHERE, 0.1, "fitted"), (TORUS, 0.1, "fitted")])
    def test_valid(self, spec, h, kind):
        _check_mesh(build_band_mesh(spec, h, kind), spec)

    def test_layers_avoid_surface(self):
        for layers in range(3, 12):
            s = _layer_offsets(layers)
            assert len(s) == layers + 1 and np.all(np.diff(s) > 0)
            k = np.searchsorted(s, 0.0) - 1
            npt.assert_allclose(-s[k] / (s[k + 1] - s[k]), 1 / 3)

    def test_no_node_on_surface_after_refinement(self):
        mesh = build_band_mesh(CIRCLE, 0.04, "polar")
        for _ in range(3):
            mesh = refine(mesh, CIRCLE)
        phi = CIRCLE.surface.signed_distance(mesh.points)
        assert np.abs(phi).min() > 1e-4 * mesh.h_max


class TestRefine:
    def test_single_triangle(self):
        t = np.array([0.0, 0.05, 0.1])
        pts = 1.05 * np.column_stack([np.cos(t), np.sin(t)])
        mesh = BandMesh(pts, np.array([[0, 1, 2]]), np.ones(3, dtype=bool))
        fine = refine(mesh, CIRCLE)
        assert fine.n_cells == 4 and fine.n_nodes == 6

    @pytest.mark.parametrize("kind", ["cartesian", "polar"])
    def test_circle_counts_and_size(self, kind):
        mesh = build_band_mesh(CIRCLE, 0.05, kind)
        fine = refine(mesh, CIRCLE)
        assert fine.n_cells == 4 * mesh.n_cells
        assert abs(fine.h_max / mesh.h_max - 0.5) <= 0.05
        assert fine.level == 1
        _check_mesh(fine, CIRCLE)

    def test_sphere_counts(self):
        mesh = build_band_mesh(SPHERE, 0.1, "fitted")
        fine = refine(mesh, SPHERE)
        assert fine.n_cells == 8 * mesh.n_cells
        _check_mesh(fine, SPHERE)

    def test_band_volume_converges(self):
        exact = CIRCLE.surface.band_volume(CIRCLE.d)
        mesh = build_band_mesh(CIRCLE, 0.05, "polar")
        errs = []
        for _ in range(3):
            errs.append(abs(mesh.volumes().sum() - exact) / exact)
            mesh = refine(mesh, CIRCLE)
        assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


class TestShapeRegularity:
    def test_equilateral(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        npt.assert_allclose(_beta(pts, np.array([[0, 1, 2]])), [math.sqrt(3)])

    def test_right_isoceles(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        npt.assert_allclose(_beta(pts, np.array([[0, 1, 2]])), [1 + math.sqrt(2)])

    def test_regular_tetrahedron_is_minimal(self):
        pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
        beta = _beta(pts, np.array([[0, 1, 2, 3]]))[0]
        npt.assert_allclose(beta, math.sqrt(6), rtol=1e-12)
        rng = np.random.default_rng(0)
        q = rng.normal(size=(200, 4, 3))
        b = _beta(q.reshape(-1, 3), np.arange(800).reshape(200, 4))
        assert np.all(b >= beta - 1e-9)

    def test_cut_elements(self):
        cells = np.array([[0, 1, 2], [1, 2, 3]])
        mask = cut_elements(cells, np.array([-1.0, 1.0, 2.0, 0.0]))
        npt.assert_array_equal(mask, [True, True])
        assert not cut_elements(cells[:1], np.array([1.0, 1.0, 2.0]))[0]

    @pytest.mark.parametrize("spec,h,kind", [(CIRCLE, 0.04, "polar"), (SPHERE, 0.1, "fitted"), (TORUS, 0.1, "fitted")])
    def test_benchmark_meshes(self, spec, h, kind):
        mesh = build_band_mesh(spec, h, kind)
        for _ in range(2 if spec.surface.dim == 2 else 1):
            q = shape_regularity(mesh, spec)
            assert np.isfinite(q.beta) and q.beta < 8
            assert q.h_max <= 4 * q.h_min
            mesh = refine(mesh, spec)


class TestVTK:
    def test_write(self, tmp_path):
        mesh = build_band_mesh(CIRCLE, 0.05, "polar")
        path = tmp_path / "m.vtk"
        write_vtk(path, mesh, {"u": np.arange(mesh.n_nodes, dtype=float)})
        text = path.read_text()
        assert text.startswith("# vtk DataFile Version")
        assert f"POINTS {mesh.n_nodes}" in text
        assert f"CELLS {mesh.n_cells} {4 * mesh.n_cells}" in text
        assert "SCALARS u double" in text
        types = text.split("CELL_TYPES")[1].split()[1 : 1 + mesh.n_cells]
        assert set(types) == {"5"}
