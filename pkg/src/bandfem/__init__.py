"""Narrow-band P1 finite elements for elliptic equations on implicit surfaces."""
from .geometry import BandSpec, Circle, Sphere, Torus, diffusion_tensor, max_band_width
from .band_mesh import BandMesh, build_band_mesh, refine, shape_regularity, write_vtk
from .hessian_recovery import clamp, interpolate_phi, recover_hessian
from .assembly import ExtendedData, assemble, element_stiffness, extend_data
from .sparse_solve import SolveReport, csr_from_triplets, matvec, pcg
from .surface_error import (
    SurfaceErrorReport,
    convergence_order,
    extract_surface,
    normal_derivative_norm,
    surface_l2_error,
    surface_max_error,
)
from .benchmarks import StudyConfig, band_width_study, case_circle, case_sphere, case_torus, run_study
from .cli import emit_report

__version__ = "0.1.0"
