"""Seeded benchmark harness: run {tveq, ista, ama} x images x densities,
score PSNR/SSIM against the originals, and emit CSV/Markdown reports plus
reconstruction images, SSIM maps, and mesh wireframes.

Each cell gets a child seed derived by stable hash from (master seed, image
name, method, density), so adding a method never perturbs another cell's
randomness. Cell failures become rows with an error string, not crashes.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cs, metrics
from .ama import AmaConfig, ama_represent
from .imgio import GrayImage, load_image, quantize, save_image
from .mesh import TriMesh, load_mesh_text

__all__ = [
    "ExperimentSpec",
    "ReportRow",
    "QualityReport",
    "run_experiment",
    "write_report",
    "read_report_csv",
    "render_wireframe",
    "child_seed",
    "METHODS",
]

METHODS = ("tveq", "ista", "ama")

CSV_COLUMNS = [
    "image",
    "resolution",
    "method",
    "density",
    "psnr_db",
    "ssim",
    "iterations",
    "converged",
    "seed",
    "error",
    "wall_time_s",  # timing stays at row end so byte comparisons can drop it
]


@dataclass
class ExperimentSpec:
    images: list[str]
    densities: list[float] = field(default_factory=lambda: [0.03, 0.10])
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    seed: int = 0
    output_dir: str = "meshcs-out"
    sensing_domain: str = "fourier"
    sensing_sampling: str = "variable_density"
    ama_options: dict = field(default_factory=dict)
    ista_options: dict = field(default_factory=dict)
    tveq_options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.images:
            raise ValueError("at least one image is required")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if not self.densities:
            raise ValueError("at least one density is required")
        for d in self.densities:
            if not 0.0 < d <= 1.0:
                raise ValueError(f"density {d} outside (0, 1]")

    def to_dict(self) -> dict:
        return {
            "images": list(self.images),
            "densities": list(self.densities),
            "methods": list(self.methods),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "sensing_domain": self.sensing_domain,
            "sensing_sampling": self.sensing_sampling,
            "ama_options": dict(self.ama_options),
            "ista_options": dict(self.ista_options),
            "tveq_options": dict(self.tveq_options),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown experiment spec keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class ReportRow:
    image: str
    resolution: str
    method: str
    density: float
    psnr_db: float = math.nan
    ssim: float = math.nan
    iterations: int = 0
    converged: bool = False
    seed: int = 0
    error: str = ""
    wall_time_s: float = 0.0


@dataclass
class QualityReport:
    rows: list[ReportRow] = field(default_factory=list)


def child_seed(master_seed: int, image_name: str, method: str, density: float) -> int:
    """Stable, collision-resistant per-cell seed."""
    key = f"{master_seed}|{image_name}|{method}|{density!r}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") & (2**63 - 1)


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def render_wireframe(mesh: TriMesh, dims: tuple[int, int]) -> GrayImage:
    """Mesh edges as 1-pixel black lines on a white background."""
    height, width = dims
    canvas = np.full((height, width), 255.0)
    verts = mesh.vertices
    for a, b in mesh.edges():
        x0, y0 = int(np.floor(verts[a, 0] + 0.5)), int(np.floor(verts[a, 1] + 0.5))
        x1, y1 = int(np.floor(verts[b, 0] + 0.5)), int(np.floor(verts[b, 1] + 0.5))
        _draw_line(canvas, x0, y0, x1, y1)
    return GrayImage(canvas)


def _draw_line(canvas: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    # Bresenham; endpoints already clipped to the canvas by mesh invariants
    h, w = canvas.shape
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= y0 < h and 0 <= x0 < w:
            canvas[y0, x0] = 0.0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _cell_tag(image_name: str, method: str, density: float) -> str:
    return f"{image_name}_{method}_d{density:g}".replace(".", "p")


def _run_cell(args) -> ReportRow:
    spec_dict, image_path, image_name, method, density = args
    spec = ExperimentSpec.from_dict(spec_dict)
    img = load_image(image_path)
    seed = child_seed(spec.seed, image_name, method, density)
    row = ReportRow(
        image=image_name,
        resolution=f"{img.width}x{img.height}",
        method=method,
        density=density,
        seed=seed,
    )
    start = time.perf_counter()
    try:
        recon, mesh, iterations, converged = _reconstruct(img, method, density, seed, spec)
        recon_q = quantize(recon)
        row.psnr_db = metrics.psnr(img, recon_q)
        row.ssim = metrics.ssim(img, recon_q).mean_ssim
        row.iterations = iterations
        row.converged = converged
        _write_cell_outputs(spec, image_name, method, density, img, recon_q, mesh)
    except Exception as exc:  # failures are data, the sweep continues
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time_s = time.perf_counter() - start
    return row


def _reconstruct(img: GrayImage, method: str, density: float, seed: int,
                 spec: ExperimentSpec):
    if method == "ama":
        opts = dict(spec.ama_options)
        cfg = AmaConfig(sample_density=density, seed=seed, **opts)
        mesh, recon = ama_represent(img, cfg)
        return recon, mesh, cfg.outer_iterations, True
    opts = dict(spec.tveq_options if method == "tveq" else spec.ista_options)
    cfg = cs.SolverConfig(**opts)
    op = cs.build_measurement_op(
        (img.height, img.width), density, spec.sensing_domain, seed,
        sampling=spec.sensing_sampling,
    )
    meas = cs.measure(img, op)
    solver = cs.reconstruct_tveq if method == "tveq" else cs.reconstruct_ista
    result = solver(meas, cfg)
    return result.image, None, result.iterations, result.converged


def _write_cell_outputs(spec, image_name, method, density, original, recon_q, mesh):
    os.makedirs(spec.output_dir, exist_ok=True)
    tag = _cell_tag(image_name, method, density)
    save_image(recon_q, os.path.join(spec.output_dir, f"{tag}.pgm"))
    smap = metrics.ssim(original, recon_q)
    save_image(
        metrics.ssim_map_to_image(smap),
        os.path.join(spec.output_dir, f"{tag}_ssim.pgm"),
    )
    if mesh is not None:
        mesh.export_text(os.path.join(spec.output_dir, f"{tag}_mesh.txt"))
        wire = render_wireframe(mesh, (original.height, original.width))
        save_image(wire, os.path.join(spec.output_dir, f"{tag}_mesh.pgm"))


def _image_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def run_experiment(spec: ExperimentSpec) -> QualityReport:
    """Run every (image, density, method) cell and return the report rows in
    spec order. Worker count comes from MESHCS_WORKERS (default 1, serial)."""
    spec.validate()
    for path in spec.images:
        load_image(path)  # fail fast before any work

    cells = []
    for path in spec.images:
        name = _image_name(path)
        for density in spec.densities:
            for method in spec.methods:
                cells.append((spec.to_dict(), path, name, method, density))

    seeds = [child_seed(spec.seed, c[2], c[3], c[4]) for c in cells]
    if len(set(seeds)) != len(seeds):
        raise ValueError("child seed collision across cells; adjust the master seed")

    workers = int(os.environ.get("MESHCS_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    return QualityReport(rows=rows)


def write_report(report: QualityReport, out_dir: str) -> tuple[str, str]:
    """Write report.csv (one header line plus one line per row) and a
    density-grouped Markdown table; returns both paths."""
    if not report.rows:
        raise ValueError("report has no rows")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "report.csv")
    md_path = os.path.join(out_dir, "report.md")

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(getattr(row, col)) for col in CSV_COLUMNS])

    with open(md_path, "w") as fh:
        fh.write("# Representation quality report\n")
        densities = sorted({r.density for r in report.rows})
        methods = [m for m in METHODS if any(r.method == m for r in report.rows)]
        for density in densities:
            fh.write(f"\n## Sample density {density:g}\n\n")
            head = (
                ["image", "resolution"]
                + [f"{m} PSNR (dB)" for m in methods]
                + [f"{m} SSIM" for m in methods]
            )
            fh.write("| " + " | ".join(head) + " |\n")
            fh.write("|" + "---|" * len(head) + "\n")
            by_image: dict[str, dict[str, ReportRow]] = {}
            order: list[str] = []
            for r in report.rows:
                if r.density != density:
                    continue
                if r.image not in by_image:
                    by_image[r.image] = {}
                    order.append(r.image)
                by_image[r.image][r.method] = r
            for name in order:
                cells = by_image[name]
                res = next(iter(cells.values())).resolution
                psnrs = [
                    _fmt_md(cells.get(m).psnr_db if m in cells else math.nan)
                    for m in methods
                ]
                ssims = [
                    _fmt_md(cells.get(m).ssim if m in cells else math.nan, 2)
                    for m in methods
                ]
                fh.write(
                    "| " + " | ".join([name, res] + psnrs + ssims) + " |\n"
                )
        fh.write(
            "\nSSIM maps are exported after the affine rescale "
            f"v -> {metrics.SSIM_MAP_SCALE}*v + {metrics.SSIM_MAP_OFFSET} "
            "mapping [-1, 1] to [0, 255].\n"
        )
    return csv_path, md_path


def _fmt_md(value: float, digits: int = 2) -> str:
    if math.isnan(value):
        return "-"
    if math.isinf(value):
        return "inf"
    return f"{value:.{digits}f}"


def _parse_field(col: str, text: str):
    if col in ("image", "resolution", "method", "error"):
        return text
    if col in ("iterations", "seed"):
        return int(text)
    if col == "converged":
        return text == "true"
    return float(text)


def read_report_csv(path: str) -> QualityReport:
    """Inverse of write_report's CSV: reparsing reproduces the report."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns {header}")
        rows = []
        for rec in reader:
            kwargs = {col: _parse_field(col, val) for col, val in zip(CSV_COLUMNS, rec)}
            rows.append(ReportRow(**kwargs))
    return QualityReport(rows=rows)
