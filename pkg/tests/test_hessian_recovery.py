import itertools

import numpy as np
import numpy.testing as npt
import pytest

from bandfem.band_mesh import BandMesh, build_band_mesh, refine
from bandfem.geometry import BandSpec, Circle, Sphere
from bandfem.hessian_recovery import (
    CLAMP_LIMIT,
    basis_gradients,
    clamp,
    clamped_diffusion,
    interpolate_phi,
    recover_field,
    recover_gradient,
    recover_hessian,
)


def _square(n, dim=2):
    """Uniform Kuhn mesh of the unit square (cube), plus the interior depth."""
    ax = np.linspace(0.0, 1.0, n + 1)
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    idx = np.arange(pts.shape[0]).reshape((n + 1,) * dim)
    cells = []
    if dim == 2:
        a, b, c, d = idx[:-1, :-1], idx[1:, :-1], idx[1:, 1:], idx[:-1, 1:]
        cells = [np.stack([a, b, c], -1), np.stack([a, c, d], -1)]
    else:
        for perm in itertools.permutations(range(3)):
            corner = [np.zeros(3, int)]
            for p in perm:
                nxt = corner[-1].copy()
                nxt[p] = 1
                corner.append(nxt)
            cells.append(np.stack([idx[tuple(slice(c, n + c) for c in o)] for o in corner], -1))
    cells = np.concatenate([c.reshape(-1, dim + 1) for c in cells])
    neg = np.linalg.det(np.swapaxes(pts[cells[:, 1:]] - pts[cells[:, :1]], 1, 2)) < 0
    cells[neg, :2] = cells[neg, 1::-1]
    depth = np.min(np.minimum(pts, 1 - pts), axis=1) * n
    return BandMesh(pts, cells, depth < 0.5), np.rint(depth)


class TestBasis:
    def test_reference_triangle(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        G, vol = basis_gradients(pts, np.array([[0, 1, 2]]))
        npt.assert_allclose(G[0], [[-1, -1], [1, 0], [0, 1]])
        npt.assert_allclose(vol, [0.5])


class TestRecovery:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_linear_has_zero_hessian(self, dim):
        mesh, _ = _square(6 if dim == 2 else 4, dim)
        c = np.arange(1, dim + 1, dtype=float)
        vals = 0.3 + mesh.points @ c
        npt.assert_allclose(recover_gradient(mesh, vals), np.broadcast_to(c, mesh.points.shape), atol=1e-12)
        npt.assert_allclose(recover_hessian(mesh, vals), 0.0, atol=1e-10)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_quadratic_exact_inside(self, dim):
        mesh, depth = _square(8 if dim == 2 else 6, dim)
        rng = np.random.default_rng(0)
        B = rng.normal(size=(dim, dim))
        M = B + B.T
        x = mesh.points
        vals = 0.5 * np.einsum("ma,ab,mb->m", x, M, x) + x.sum(axis=1)
        H = recover_hessian(mesh, vals)
        inner = depth >= 2
        assert inner.any()
        npt.assert_allclose(H[inner], np.broadcast_to(M, H[inner].shape), atol=1e-10)
        npt.assert_allclose(H, np.swapaxes(H, 1, 2))

    def test_isolated_node_rejected(self):
        mesh, _ = _square(2)
        pts = np.vstack([mesh.points, [[5.0, 5.0]]])
        lonely = BandMesh(pts, mesh.cells, np.append(mesh.boundary, True))
        with pytest.raises(ValueError):
            recover_hessian(lonely, np.zeros(len(pts)))

    def test_circle_band_converges(self):
        spec = BandSpec(Circle(), 0.05)
        mesh = build_band_mesh(spec, 0.04, "polar")
        errs = []
        for _ in range(3):
            field = recover_field(mesh, spec.surface)
            npt.assert_allclose(field.phi, interpolate_phi(mesh, spec.surface))
            exact = spec.surface.hessian(mesh.points)
            inner = ~mesh.boundary
            errs.append(np.abs(field.hessian[inner] - exact[inner]).max())
            mesh = refine(mesh, spec)
        assert errs[-1] < 0.2


class TestClamp:
    def test_inactive_at_zero_phi(self):
        H = np.diag([3.0, -7.0])
        npt.assert_allclose(clamp(0.0, H), H)

    def test_example(self):
        npt.assert_allclose(clamp(1.0, np.diag([0.9, 0.0])), np.diag([0.5, 0.0]))
        npt.assert_allclose(clamp(-0.5, np.diag([2.0, 0.0])), np.diag([1.0, 0.0]))

    def test_batch_and_inactive(self):
        H = np.array([np.diag([0.9, 0.0]), np.diag([0.2, 0.1])])
        out = clamp(np.array([1.0, 1.0]), H)
        npt.assert_allclose(out[0], np.diag([0.5, 0.0]))
        npt.assert_allclose(out[1], H[1])

    def test_diffusion_spectrum_bounded(self):
        rng = np.random.default_rng(2)
        B = rng.normal(scale=5.0, size=(500, 3, 3))
        H = B + np.swapaxes(B, 1, 2)
        phi = rng.uniform(-0.3, 0.3, 500)
        D, active = clamped_diffusion(phi, H)
        ev = np.linalg.eigvalsh(D)
        assert ev.min() >= 4 / 9 - 1e-12 and ev.max() <= 4 + 1e-12
        assert 0 < active <= 500
        lam = np.linalg.eigvalsh(phi[:, None, None] * clamp(phi, H))
        assert np.abs(lam).max() <= CLAMP_LIMIT + 1e-12

    @pytest.mark.parametrize("surf,d", [(Circle(), 0.05), (Sphere(), 0.1)], ids=["circle", "sphere"])
    def test_never_active_inside_safe_band(self, surf, d):
        x = surf.sample_band(2000, d, np.random.default_rng(3))
        _, active = clamped_diffusion(surf.signed_distance(x), surf.hessian(x))
        assert active == 0
