"""Benchmark problems, the manufactured-solution oracle and the study driver."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .assembly import ExtendedData, assemble
from .band_mesh import BandMesh, build_band_mesh, refine
from .geometry import BandSpec, Circle, ImplicitSurface, Sphere, Torus
from .hessian_recovery import RecoveredField, interpolate_phi, recover_hessian
from .sparse_solve import pcg
from .surface_error import (
    SurfaceErrorReport,
    attach_orders,
    error_by_gauss_sign,
    extract_surface,
    normal_derivative_norm,
    surface_l2_error,
    surface_max_error,
)

log = logging.getLogger(__name__)

HESSIAN_MODES = ("exact", "recovered")
ORACLE_TOL = 1e-6
# sphere band-width study: widths and the common mesh size (d = 0.1 then has
# about 1.3e4 dofs, the resolution of the published comparison)
BAND_WIDTHS = (0.4, 0.2, 0.1)
BAND_STUDY_H = 0.07


class StudyConfigError(ValueError):
    """Invalid study configuration."""


@dataclass(frozen=True)
class BenchmarkCase:
    """A manufactured problem ``-Lap_Gamma u + alpha u = f`` on ``surface``.

    ``u``, ``f`` and ``alpha`` take surface points ``(m, N)``.
    """

    name: str
    surface: ImplicitSurface
    d: float
    u: Callable
    f: Callable
    alpha: Callable
    levels: int
    h0: float
    mesh: str = "fitted"
    hessian: str = "exact"
    convention: str = ""

    @property
    def dim(self) -> int:
        return self.surface.dim

    def data(self) -> ExtendedData:
        return ExtendedData(alpha=self.alpha, f=self.f)


def _one(p):
    return np.ones(len(np.atleast_2d(p)))


# -- circle --------------------------------------------------------------------

def _circle_u(p):
    p = np.atleast_2d(p)
    return np.cos(5 * np.arctan2(p[:, 1], p[:, 0]))


def _circle_f(p):
    return 26.0 * _circle_u(p)


def case_circle() -> BenchmarkCase:
    return BenchmarkCase(
        name="circle",
        surface=Circle(1.0),
        d=0.05,
        u=_circle_u,
        f=_circle_f,
        alpha=_one,
        levels=5,
        h0=0.04,
        mesh="polar",
        convention="-lap u + u = f, u = cos(5 theta), f = 26 cos(5 theta)",
    )


# -- sphere ----------------------------------------------------------------------

def _sphere_u(p):
    p = np.atleast_2d(p)
    r = np.linalg.norm(p, axis=1)
    return 12.0 / r**3 * (3 * p[:, 0] ** 2 * p[:, 1] - p[:, 1] ** 3)


def _sphere_f(p):
    return 13.0 * _sphere_u(p)


def case_sphere() -> BenchmarkCase:
    return BenchmarkCase(
        name="sphere",
        surface=Sphere(1.0),
        d=0.1,
        u=_sphere_u,
        f=_sphere_f,
        alpha=_one,
        levels=3,
        h0=0.1,
        convention="-lap u + u = f, u = 12|x|^-3 (3 x1^2 x2 - x2^3), f = 13 u",
    )


# -- torus --------------------------------------------------------------------------

TORUS = Torus(1.0, 0.6)


def torus_u_angles(tube, az):
    return np.sin(3 * az) * np.cos(3 * tube + az)


def torus_lb_closed_form(tube, az, R=TORUS.major, r=TORUS.minor):
    """Closed-form source for the torus solution with the parentheses read
    as ``(R + r cos(tube))^-2``; it equals ``-Lap_Gamma u``."""
    ring = R + r * np.cos(tube)
    s3, c3 = np.sin(3 * az), np.cos(3 * az)
    ca, sa = np.cos(3 * tube + az), np.sin(3 * tube + az)
    return (
        9 * s3 * ca / r**2
        - ring**-2 * (-10 * s3 * ca - 6 * c3 * sa)
        - (3 * np.sin(tube) * s3 * sa) / (r * ring)
    )


def _torus_u(p):
    tube, az = TORUS.angles(np.atleast_2d(p))
    return torus_u_angles(tube, az)


def _torus_f(p):
    tube, az = TORUS.angles(np.atleast_2d(p))
    return torus_lb_closed_form(tube, az) + torus_u_angles(tube, az)


def case_torus() -> BenchmarkCase:
    return BenchmarkCase(
        name="torus",
        surface=TORUS,
        d=0.1,
        u=_torus_u,
        f=_torus_f,
        alpha=_one,
        levels=3,
        h0=0.1,
        convention="-lap u + u = f, u = sin(3 az) cos(3 tube + az), f = closed form (= -lap u) + u",
    )


CASES = {"circle": case_circle, "sphere": case_sphere, "torus": case_torus}


def get_case(name: str) -> BenchmarkCase:
    try:
        return CASES[name]()
    except KeyError:
        raise StudyConfigError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None


# -- manufactured-solution oracle ------------------------------------------------------

# sixth-order central differences
_D1 = (np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0, np.arange(-3, 4))
_D2 = (np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0, np.arange(-3, 4))


def _fd(fun, a, b, axis, order, step):
    coef, shifts = _D1 if order == 1 else _D2
    out = np.zeros_like(a)
    for c, k in zip(coef, shifts):
        if c == 0:
            continue
        out += c * (fun(a + k * step, b) if axis == 0 else fun(a, b + k * step))
    return out / step**order


def _param_map(case: BenchmarkCase):
    """Return ``(to_points, laplacian(g, a, b, step), sampler)`` for the case's
    intrinsic coordinates."""
    surf = case.surface
    if isinstance(surf, Circle):
        R = surf.radius

        def to_pts(a, b):
            return R * np.column_stack([np.cos(a), np.sin(a)])

        def lap(g, a, b, step):
            return _fd(g, a, b, 0, 2, step) / R**2

        def sample(rng, n):
            return rng.uniform(-np.pi, np.pi, n), np.zeros(n)

    elif isinstance(surf, Sphere):
        R = surf.radius

        def to_pts(a, b):  # a = colatitude, b = longitude
            return R * np.column_stack([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)])

        def lap(g, a, b, step):
            return (
                _fd(g, a, b, 0, 2, step)
                + np.cos(a) / np.sin(a) * _fd(g, a, b, 0, 1, step)
                + _fd(g, a, b, 1, 2, step) / np.sin(a) ** 2
            ) / R**2

        def sample(rng, n):
            return rng.uniform(0.2, np.pi - 0.2, n), rng.uniform(-np.pi, np.pi, n)

    elif isinstance(surf, Torus):
        Rm, r = surf.major, surf.minor

        def to_pts(a, b):  # a = tube angle, b = azimuth
            return surf.point(a, b)

        def lap(g, a, b, step):
            ring = Rm + r * np.cos(a)
            return (
                _fd(g, a, b, 0, 2, step) / r**2
                - np.sin(a) / (r * ring) * _fd(g, a, b, 0, 1, step)
                + _fd(g, a, b, 1, 2, step) / ring**2
            )

        def sample(rng, n):
            return rng.uniform(-np.pi, np.pi, n), rng.uniform(-np.pi, np.pi, n)

    else:
        raise StudyConfigError(f"no intrinsic coordinates for {type(surf).__name__}")
    return to_pts, lap, sample


def manufactured_residual(case: BenchmarkCase, n: int = 1000, step: float = 1e-2, seed: int = 0) -> float:
    """``max |f - alpha u + Lap_Gamma u|`` at ``n`` random surface points,
    with the Laplace-Beltrami operator from finite differences in intrinsic
    coordinates.  Small values certify that ``f`` matches ``u``."""
    to_pts, lap, sample = _param_map(case)
    rng = np.random.default_rng(seed)
    a, b = sample(rng, n)

    def g(a_, b_):
        return case.u(to_pts(a_, b_))

    p = to_pts(a, b)
    lhs = -lap(g, a, b, step) + case.alpha(p) * case.u(p)
    return float(np.abs(lhs - case.f(p)).max())


def check_manufactured(case: BenchmarkCase, tol: float = ORACLE_TOL) -> float:
    res = manufactured_residual(case)
    if not res <= tol:
        raise StudyConfigError(f"{case.name}: f does not match u (oracle residual {res:.3e})")
    return res


# -- studies ----------------------------------------------------------------------------

@dataclass
class StudyConfig:
    case: str
    hessian: str = "exact"
    levels: int | None = None
    d: float | None = None
    h0: float | None = None
    tol: float = 1e-9
    mesh: str | None = None
    out: str | None = None
    format: str = "csv"
    vtk: str | None = None

    def resolve(self) -> BenchmarkCase:
        case = get_case(self.case)
        if self.hessian not in HESSIAN_MODES:
            raise StudyConfigError(f"hessian must be one of {HESSIAN_MODES}, got {self.hessian!r}")
        overrides = {"hessian": self.hessian}
        for key in ("levels", "d", "h0", "mesh"):
            val = getattr(self, key)
            if val is not None:
                overrides[key] = val
        case = replace(case, **overrides)
        if case.levels < 1:
            raise StudyConfigError("levels must be at least 1")
        if not case.d > 0 or not case.h0 > 0:
            raise StudyConfigError("d and h0 must be positive")
        if not 0 < self.tol < 1:
            raise StudyConfigError("tol must lie in (0, 1)")
        return case


@dataclass
class StudyResult:
    case: BenchmarkCase
    reports: list = field(default_factory=list)
    aborted: bool = False
    message: str = ""
    extras: list = field(default_factory=list)  # per level diagnostics, not in the CSV
    seconds: float = 0.0

    def header(self) -> list[str]:
        c = self.case
        lines = [
            f"case={c.name} hessian={c.hessian} d={c.d:g} h0={c.h0:g} levels={c.levels} mesh={c.mesh}",
            f"pde: {c.convention}",
        ]
        for ex in self.extras:
            if "gauss_neg" in ex:
                lines.append(
                    f"level {ex['level']}: mean facet error negative K {ex['gauss_neg']:.6g}, "
                    f"positive K {ex['gauss_pos']:.6g}"
                )
        if self.aborted:
            lines.append(f"ABORTED: {self.message}")
        return lines


def solve_level(case: BenchmarkCase, mesh: BandMesh, tol: float = 1e-9, x0=None, clamp: bool = True):
    """Assemble and solve on one mesh; return ``(u_h, SolveReport, FemSystem)``."""
    spec = BandSpec(case.surface, case.d)
    recovered = None
    if case.hessian == "recovered":
        phi_h = interpolate_phi(mesh, case.surface)
        recovered = RecoveredField(phi_h, recover_hessian(mesh, phi_h))
    system = assemble(mesh, spec, case.data(), mode=case.hessian, recovered=recovered, clamp=clamp)
    u_h, rep = pcg(system.A, system.b, tol=tol, x0=x0)
    return u_h, rep, system


def evaluate_level(case: BenchmarkCase, mesh: BandMesh, u_h, iters: int, converged: bool = True):
    """Error report for one level plus a dict of extra diagnostics."""
    phi_h = interpolate_phi(mesh, case.surface)
    gamma = extract_surface(mesh, phi_h)
    surf = case.surface
    report = SurfaceErrorReport(
        level=mesh.level,
        dofs=mesh.n_nodes,
        h=mesh.h_max,
        L2=surface_l2_error(u_h, case.u, gamma, mesh, surf),
        Cnorm=surface_max_error(u_h, case.u, gamma, mesh, surf),
        normal_deriv=normal_derivative_norm(u_h, mesh, surf),
        iters=iters,
        converged=converged,
    )
    extras = {"level": mesh.level, "surface_measure": gamma.measure()}
    if isinstance(surf, Torus):
        extras["gauss_neg"], extras["gauss_pos"] = error_by_gauss_sign(u_h, case.u, gamma, mesh, surf)
    return report, extras


def run_study(config: StudyConfig, on_level: Callable | None = None, check: bool = True) -> StudyResult:
    """Refinement study: one report per level, orders from consecutive levels.

    ``on_level(mesh, u_h, report)`` is called after every level (the CLI
    uses it for VTK output).  A solver failure stops the study and flags the
    partial result.
    """
    case = config.resolve()
    if check:
        check_manufactured(case)
    spec = BandSpec(case.surface, case.d)
    result = StudyResult(case)
    t0 = time.perf_counter()
    mesh = None
    for level in range(case.levels):
        mesh = build_band_mesh(spec, case.h0, case.mesh) if mesh is None else refine(mesh, spec)
        u_h, rep, system = solve_level(case, mesh, config.tol)
        report, extras = evaluate_level(case, mesh, u_h, rep.iterations, rep.converged)
        extras.update(
            d_eig_min=system.metadata["d_eig_min"],
            d_eig_max=system.metadata["d_eig_max"],
            clamped_points=system.metadata["clamped_points"],
        )
        result.reports.append(report)
        result.extras.append(extras)
        log.info(
            "%s level %d: %d dofs, L2 %.4e, %d iterations", case.name, level, mesh.n_nodes, report.L2, rep.iterations
        )
        if on_level is not None:
            on_level(mesh, u_h, report)
        if not rep.converged:
            result.aborted = True
            result.message = f"solver did not converge at level {level} (residual {rep.residual:.3e})"
            break
    attach_orders(result.reports, case.dim)
    result.seconds = time.perf_counter() - t0
    return result


def band_width_study(
    case_name: str, widths=BAND_WIDTHS, h: float = BAND_STUDY_H, hessian: str = "exact", tol: float = 1e-9, mesh=None
) -> list[SurfaceErrorReport]:
    """One solve per band half-width at a common mesh size ``h``; reports
    come back in the order of ``widths``."""
    reports = []
    for d in widths:
        cfg = StudyConfig(case=case_name, hessian=hessian, levels=1, d=d, h0=h, tol=tol, mesh=mesh)
        res = run_study(cfg)
        if res.aborted:
            raise RuntimeError(f"band-width study failed at d={d}: {res.message}")
        reports.append(res.reports[0])
    return reports


def mean_order(reports, key: str = "L2_order", last: int | None = None) -> float:
    vals = [getattr(r, key) for r in reports if getattr(r, key) is not None]
    if last is not None:
        vals = vals[-last:]
    return float(np.mean(vals)) if vals else math.nan
