"""meshcs: grayscale image representation by compressive sampling (ISTA and
equality-constrained TV) and by anisotropic mesh adaptation, with a seeded
PSNR/SSIM benchmark harness."""

from .ama import AmaConfig, MetricField, adapt_mesh, ama_represent, compute_metric, initial_mesh
from .bench import ExperimentSpec, QualityReport, run_experiment, write_report
from .cs import (
    MeasurementOp,
    Measurements,
    ReconResult,
    SolverConfig,
    build_measurement_op,
    measure,
    reconstruct_ista,
    reconstruct_tveq,
    soft_threshold,
    tv_gradient_pair,
    tv_value,
)
from .imgio import GrayImage, load_image, quantize, save_image
from .mesh import BarycentricCoords, TriMesh, delaunay, load_mesh_text
from .metrics import SsimParams, SsimResult, mse, psnr, ssim
from .transforms import transform_forward, transform_inverse

__version__ = "0.1.0"

__all__ = [
    "AmaConfig",
    "BarycentricCoords",
    "ExperimentSpec",
    "GrayImage",
    "MeasurementOp",
    "Measurements",
    "MetricField",
    "QualityReport",
    "ReconResult",
    "SolverConfig",
    "SsimParams",
    "SsimResult",
    "TriMesh",
    "adapt_mesh",
    "ama_represent",
    "build_measurement_op",
    "compute_metric",
    "delaunay",
    "initial_mesh",
    "load_image",
    "load_mesh_text",
    "measure",
    "mse",
    "psnr",
    "quantize",
    "reconstruct_ista",
    "reconstruct_tveq",
    "run_experiment",
    "save_image",
    "soft_threshold",
    "ssim",
    "transform_forward",
    "transform_inverse",
    "tv_gradient_pair",
    "tv_value",
    "write_report",
]
