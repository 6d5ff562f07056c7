"""Analytic signed-distance surfaces and the extended diffusion tensor.

All evaluators accept either a single point of shape ``(N,)`` or a batch of
shape ``(m, N)`` and return results with the matching leading shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEDIAL_TOL = 1e-8


class MedialAxisError(ValueError):
    """Raised when a distance quantity is requested on the medial axis."""


class BandConditionError(ArithmeticError):
    """Raised when ``I - phi*H`` is singular or indefinite."""


def _as_points(x, dim):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return pts, single


def _unwrap(values, single):
    return values[0] if single else values


class ImplicitSurface:
    """Common evaluation layer; subclasses provide the raw batch kernels."""

    dim: int

    # -- kernels on (m, N) arrays, no guards --------------------------------
    def _phi(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError

    def _hess(self, x):
        raise NotImplementedError

    def _guard(self, x):
        raise NotImplementedError

    # -- public API ----------------------------------------------------------
    def signed_distance(self, x):
        pts, single = _as_points(x, self.dim)
        self._guard(pts)
        return _unwrap(self._phi(pts), single)

    def normal(self, x):
        pts, single = _as_points(x, self.dim)
        self._guard(pts)
        return _unwrap(self._grad(pts), single)

    def hessian(self, x):
        pts, single = _as_points(x, self.dim)
        self._guard(pts)
        return _unwrap(self._hess(pts), single)

    def closest_point(self, x):
        pts, single = _as_points(x, self.dim)
        self._guard(pts)
        p = pts - self._phi(pts)[:, None] * self._grad(pts)
        return _unwrap(p, single)

    def phi_unchecked(self, x):
        """Signed distance without the medial-axis guard (mesh generation)."""
        pts, single = _as_points(x, self.dim)
        return _unwrap(self._phi(pts), single)

    def principal_curvatures(self, p):
        """Principal curvatures at surface points, shape ``(m, N-1)``."""
        raise NotImplementedError

    def gauss_curvature(self, p):
        k = np.atleast_2d(self.principal_curvatures(p))
        out = np.prod(k, axis=1)
        return out[0] if np.ndim(p) == 1 else out

    def max_curvature_sum(self) -> float:
        """``max over the surface of sum_i |kappa_i|``."""
        raise NotImplementedError

    def measure(self) -> float:
        """Length (2D) or area (3D) of the surface."""
        raise NotImplementedError

    def band_volume(self, d: float) -> float:
        """Exact measure of ``{|phi| < d}``."""
        raise NotImplementedError

    def bounding_box(self, margin: float):
        raise NotImplementedError

    def sample_band(self, n: int, d: float, rng) -> np.ndarray:
        """Random points with ``|phi| < d`` (used by property checks)."""
        raise NotImplementedError


class _RoundSurface(ImplicitSurface):
    """Circle or sphere of given radius centred at the origin."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def _phi(self, x):
        return np.linalg.norm(x, axis=1) - self.radius

    def _grad(self, x):
        return x / np.linalg.norm(x, axis=1)[:, None]

    def _hess(self, x):
        r = np.linalg.norm(x, axis=1)
        n = x / r[:, None]
        eye = np.eye(self.dim)
        return (eye - n[:, :, None] * n[:, None, :]) / r[:, None, None]

    def _guard(self, x):
        if np.any(np.linalg.norm(x, axis=1) < MEDIAL_TOL):
            raise MedialAxisError("point too close to the centre")

    def principal_curvatures(self, p):
        pts, single = _as_points(p, self.dim)
        k = np.full((len(pts), self.dim - 1), 1.0 / self.radius)
        return _unwrap(k, single)

    def max_curvature_sum(self):
        return (self.dim - 1) / self.radius

    def bounding_box(self, margin):
        ext = self.radius + margin
        return -np.full(self.dim, ext), np.full(self.dim, ext)

    def sample_band(self, n, d, rng):
        dirs = rng.normal(size=(n, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        r = self.radius + rng.uniform(-d, d, size=n)
        return dirs * r[:, None]


@dataclass(frozen=True)
class Circle(_RoundSurface):
    radius: float = 1.0
    dim: int = 2

    def measure(self):
        return 2 * np.pi * self.radius

    def band_volume(self, d):
        return 4 * np.pi * self.radius * d


@dataclass(frozen=True)
class Sphere(_RoundSurface):
    radius: float = 1.0
    dim: int = 3

    def measure(self):
        return 4 * np.pi * self.radius**2

    def band_volume(self, d):
        return 4 / 3 * np.pi * ((self.radius + d) ** 3 - (self.radius - d) ** 3)


@dataclass(frozen=True)
class Torus(ImplicitSurface):
    """Torus around the x3 axis with centre-circle radius ``major`` and tube
    radius ``minor``."""

    major: float = 1.0
    minor: float = 0.6
    dim: int = 3

    def __post_init__(self):
        if not 0 < self.minor < self.major:
            raise ValueError("torus needs 0 < minor < major")

    def _split(self, x):
        rho = np.hypot(x[:, 0], x[:, 1])
        s = np.hypot(rho - self.major, x[:, 2])
        return rho, s

    def _phi(self, x):
        rho, s = self._split(x)
        return s - self.minor

    def _grad(self, x):
        rho, s = self._split(x)
        n = np.empty_like(x)
        scale = (rho - self.major) / (rho * s)
        n[:, 0] = x[:, 0] * scale
        n[:, 1] = x[:, 1] * scale
        n[:, 2] = x[:, 2] / s
        return n

    def _hess(self, x):
        # D^2 phi = (I - n n^T)/s - R/(rho s) e_az e_az^T
        rho, s = self._split(x)
        n = self._grad(x)
        e_az = np.zeros_like(x)
        e_az[:, 0] = -x[:, 1] / rho
        e_az[:, 1] = x[:, 0] / rho
        eye = np.eye(3)
        H = (eye - n[:, :, None] * n[:, None, :]) / s[:, None, None]
        H -= (self.major / (rho * s))[:, None, None] * e_az[:, :, None] * e_az[:, None, :]
        return H

    def _guard(self, x):
        rho, s = self._split(x)
        if np.any(s < MEDIAL_TOL) or np.any(rho < MEDIAL_TOL):
            raise MedialAxisError("point too close to the centre circle or the axis")

    def angles(self, x):
        """Return ``(tube_angle, azimuth)`` of points, measured about the
        centre circle and the x3 axis respectively."""
        pts, single = _as_points(x, 3)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        tube = np.arctan2(pts[:, 2], rho - self.major)
        azimuth = np.arctan2(pts[:, 1], pts[:, 0])
        return _unwrap(tube, single), _unwrap(azimuth, single)

    def point(self, tube, azimuth, offset=0.0):
        """Point at signed distance ``offset`` with the given torus angles."""
        rad = self.minor + offset
        ring = self.major + rad * np.cos(tube)
        return np.stack(
            [ring * np.cos(azimuth), ring * np.sin(azimuth), rad * np.sin(tube) * np.ones_like(azimuth)],
            axis=-1,
        )

    def principal_curvatures(self, p):
        pts, single = _as_points(p, 3)
        tube, _ = self.angles(pts)
        c = np.cos(tube)
        k = np.stack([np.full_like(c, 1.0 / self.minor), c / (self.major + self.minor * c)], axis=1)
        return _unwrap(k, single)

    def max_curvature_sum(self):
        # attained on the inner equator
        return 1.0 / self.minor + 1.0 / (self.major - self.minor)

    def measure(self):
        return 4 * np.pi**2 * self.major * self.minor

    def band_volume(self, d):
        return 2 * np.pi**2 * self.major * ((self.minor + d) ** 2 - (self.minor - d) ** 2)

    def bounding_box(self, margin):
        a = self.major + self.minor + margin
        b = self.minor + margin
        return np.array([-a, -a, -b]), np.array([a, a, b])

    def sample_band(self, n, d, rng):
        tube = rng.uniform(-np.pi, np.pi, size=n)
        az = rng.uniform(-np.pi, np.pi, size=n)
        off = rng.uniform(-d, d, size=n)
        return self.point(tube, az, off)


@dataclass(frozen=True)
class BandSpec:
    """The band ``{x : |phi(x)| < d}`` around ``surface``."""

    surface: ImplicitSurface
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("band half-width must be positive")


def max_band_width(surface: ImplicitSurface) -> float:
    """Sufficient band half-width ``(4 max(|k1| + |k2|))^-1``."""
    return 1.0 / (4.0 * surface.max_curvature_sum())


def diffusion_tensor(phi, H):
    """Return ``(I - phi H)^-2`` for one tensor or a batch ``(m, N, N)``."""
    H = np.asarray(H, dtype=float)
    phi = np.asarray(phi, dtype=float)
    single = H.ndim == 2
    Hb = H[None] if single else H
    phib = np.broadcast_to(phi, Hb.shape[:1])
    M = np.eye(Hb.shape[-1]) - phib[:, None, None] * Hb
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    lam, V = np.linalg.eigh(M)
    if np.any(lam <= 1e-12):
        raise BandConditionError("I - phi*H is not positive definite; clamp first")
    D = np.einsum("mik,mk,mjk->mij", V, lam**-2, V)
    return D[0] if single else D


def spectral_norm(H):
    """Spectral norm of symmetric tensors (batch-aware)."""
    return np.max(np.abs(np.linalg.eigvalsh(np.asarray(H, dtype=float))), axis=-1)
