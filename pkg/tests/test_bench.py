import json
import math
import os

import numpy as np
import pytest

from meshcs import bench, cli
from meshcs.bench import (
    CSV_COLUMNS,
    ExperimentSpec,
    QualityReport,
    ReportRow,
    child_seed,
    read_report_csv,
    render_wireframe,
    run_experiment,
    write_report,
)
from meshcs.imgio import GrayImage, load_image, save_image
from meshcs.mesh import delaunay
from meshcs.phantoms import smooth_blobs


def tiny_spec(tmp_path, **overrides):
    img_path = tmp_path / "blob.pgm"
    save_image(smooth_blobs(24, seed=1), img_path)
    base = dict(
        images=[str(img_path)],
        densities=[0.2, 0.5],
        methods=["tveq", "ista", "ama"],
        seed=3,
        output_dir=str(tmp_path / "out"),
        ista_options={"max_iterations": 40},
        tveq_options={"max_iterations": 40},
        ama_options={"outer_iterations": 2},
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def strip_timing(csv_text):
    lines = csv_text.strip().split("\n")
    assert lines[0].split(",")[-1] == "wall_time_s"
    return "\n".join(",".join(line.split(",")[:-1]) for line in lines)


# -- seeds -----------------------------------------------------------------------


def test_child_seeds_distinct_and_stable():
    cells = [
        ("img_a", m, d)
        for m in ("tveq", "ista", "ama")
        for d in (0.03, 0.1, 0.5)
    ]
    seeds = [child_seed(0, *c) for c in cells]
    assert len(set(seeds)) == len(seeds)
    assert child_seed(0, "img_a", "tveq", 0.03) == seeds[0]  # stable in-run
    assert child_seed(1, "img_a", "tveq", 0.03) != seeds[0]


# -- wireframe --------------------------------------------------------------------


def bresenham_pixels(x0, y0, x1, y1):
    pts = set()
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        pts.add((x0, y0))
        if (x0, y0) == (x1, y1):
            return pts
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def test_wireframe_minimal_mesh_draws_five_segments():
    mesh = delaunay([[0.0, 0.0], [7.0, 0.0], [7.0, 7.0], [0.0, 7.0]])
    img = render_wireframe(mesh, (8, 8))
    expect = set()
    verts = mesh.vertices.astype(int)
    edges = mesh.edges()
    assert len(edges) == 5  # 4 border + 1 diagonal
    for a, b in edges:
        expect |= bresenham_pixels(*verts[a], *verts[b])
    black = {(x, y) for y, x in zip(*np.nonzero(img.pixels == 0.0))}
    assert black == expect
    white = img.pixels[img.pixels != 0.0]
    assert np.all(white == 255.0)  # non-edge pixels stay background


def test_wireframe_pixel_count_grows_with_refinement(rng):
    corners = [[0.0, 0.0], [31.0, 0.0], [31.0, 31.0], [0.0, 31.0]]
    coarse = delaunay(np.array(corners))
    fine = delaunay(np.vstack([corners, rng.uniform(2, 29, size=(30, 2))]))
    n_coarse = int((render_wireframe(coarse, (32, 32)).pixels == 0).sum())
    n_fine = int((render_wireframe(fine, (32, 32)).pixels == 0).sum())
    assert n_fine > n_coarse


# -- experiment harness ------------------------------------------------------------


def test_run_experiment_rows_and_artifacts(tmp_path):
    spec = tiny_spec(tmp_path)
    report = run_experiment(spec)
    assert len(report.rows) == 6  # 1 image x 2 densities x 3 methods
    for row in report.rows:
        assert row.error == ""
        assert row.resolution == "24x24"
        assert not math.isnan(row.psnr_db)
        assert -1.0 <= row.ssim <= 1.0
    out = spec.output_dir
    assert os.path.exists(os.path.join(out, "blob_tveq_d0p2.pgm"))
    assert os.path.exists(os.path.join(out, "blob_tveq_d0p2_ssim.pgm"))
    assert os.path.exists(os.path.join(out, "blob_ama_d0p5_mesh.pgm"))
    assert os.path.exists(os.path.join(out, "blob_ama_d0p5_mesh.txt"))
    # every artifact survives an imgio round trip
    recon = load_image(os.path.join(out, "blob_ama_d0p5.pgm"))
    assert recon.width == 24


def test_run_experiment_density_ordering(tmp_path):
    spec = tiny_spec(tmp_path)
    report = run_experiment(spec)
    by = {(r.method, r.density): r for r in report.rows}
    for m in ("tveq", "ama"):
        assert by[(m, 0.5)].psnr_db >= by[(m, 0.2)].psnr_db


def test_run_experiment_deterministic(tmp_path):
    spec = tiny_spec(tmp_path)
    r1 = run_experiment(spec)
    write_report(r1, spec.output_dir)
    csv1 = open(os.path.join(spec.output_dir, "report.csv")).read()
    r2 = run_experiment(spec)
    write_report(r2, spec.output_dir)
    csv2 = open(os.path.join(spec.output_dir, "report.csv")).read()
    assert strip_timing(csv1) == strip_timing(csv2)


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="method"):
        tiny_spec(tmp_path, methods=[]).validate()
    with pytest.raises(ValueError, match="unknown method"):
        tiny_spec(tmp_path, methods=["magic"]).validate()
    with pytest.raises(ValueError, match="density"):
        tiny_spec(tmp_path, densities=[2.0]).validate()
    with pytest.raises(ValueError, match="image"):
        ExperimentSpec(images=[]).validate()
    with pytest.raises(ValueError, match="unknown experiment spec keys"):
        ExperimentSpec.from_dict({"images": ["x"], "bogus": 1})


def test_run_experiment_missing_image_fails_fast(tmp_path):
    spec = tiny_spec(tmp_path, images=[str(tmp_path / "nope.pgm")])
    with pytest.raises(OSError):
        run_experiment(spec)


def test_cell_failure_becomes_row(tmp_path, monkeypatch):
    spec = tiny_spec(tmp_path, densities=[0.3])

    def boom(*a, **k):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(bench.cs, "reconstruct_tveq", boom)
    report = run_experiment(spec)
    failed = [r for r in report.rows if r.method == "tveq"]
    ok = [r for r in report.rows if r.method != "tveq"]
    assert len(failed) == 1 and "solver exploded" in failed[0].error
    assert all(r.error == "" for r in ok)
    assert math.isnan(failed[0].psnr_db)


# -- report files -------------------------------------------------------------------


def test_write_report_csv_shape(tmp_path):
    row = ReportRow(
        image="img", resolution="8x8", method="ama", density=0.1,
        psnr_db=math.inf, ssim=0.5, iterations=3, converged=True,
        seed=7, wall_time_s=0.25,
    )
    csv_path, md_path = write_report(QualityReport(rows=[row]), str(tmp_path))
    lines = open(csv_path).read().strip().split("\n")
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[0].split(",")[-1] == "wall_time_s"  # timing column stays last
    assert lines[1].split(",")[4] == "inf"  # +inf PSNR serializes as the token
    assert os.path.exists(md_path)
    assert "inf" in open(md_path).read()


def test_report_csv_roundtrip(tmp_path):
    rows = [
        ReportRow("a", "8x8", "tveq", 0.03, 31.25, 0.75, 100, True, 42, "", 1.5),
        ReportRow("a", "8x8", "ama", 0.03, math.inf, 1.0, 5, True, 43, "", 0.5),
        ReportRow("b", "8x8", "ista", 0.1, math.nan, math.nan, 0, False, 44, "boom", 0.1),
    ]
    report = QualityReport(rows=rows)
    csv_path, _ = write_report(report, str(tmp_path))
    back = read_report_csv(csv_path)
    for orig, rec in zip(report.rows, back.rows):
        for col in CSV_COLUMNS:
            a, b = getattr(orig, col), getattr(rec, col)
            if isinstance(a, float) and math.isnan(a):
                assert math.isnan(b)
            else:
                assert a == b


def test_write_report_empty_error(tmp_path):
    with pytest.raises(ValueError, match="rows"):
        write_report(QualityReport(), str(tmp_path))


def test_workers_env_gives_identical_report(tmp_path, monkeypatch):
    spec = tiny_spec(tmp_path, methods=["tveq", "ama"], densities=[0.3])
    serial = run_experiment(spec)
    monkeypatch.setenv("MESHCS_WORKERS", "2")
    parallel = run_experiment(spec)
    for a, b in zip(serial.rows, parallel.rows):
        assert (a.image, a.method, a.density, a.psnr_db, a.ssim, a.seed) == (
            b.image, b.method, b.density, b.psnr_db, b.ssim, b.seed
        )


# -- CLI ---------------------------------------------------------------------------


def test_cli_metrics(tmp_path, capsys):
    a = smooth_blobs(24, seed=2)
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    save_image(a, pa)
    save_image(a, pb)
    code = cli.main(["metrics", "--ref", str(pa), "--test", str(pb)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PSNR: inf" in out
    assert "SSIM: 1.000000" in out


def test_cli_reconstruct_and_mesh_render(tmp_path, capsys):
    img_path = tmp_path / "img.pgm"
    save_image(smooth_blobs(24, seed=3), img_path)
    out_dir = tmp_path / "cellout"
    code = cli.main([
        "reconstruct", "--image", str(img_path), "--method", "ama",
        "--density", "0.3", "--seed", "5", "--out", str(out_dir),
    ])
    assert code == 0
    assert "PSNR" in capsys.readouterr().out
    mesh_txt = out_dir / "img_ama_d0p3_mesh.txt"
    assert mesh_txt.exists()
    wire_path = tmp_path / "wire.pgm"
    code = cli.main(["mesh-render", "--mesh", str(mesh_txt), "--out", str(wire_path)])
    assert code == 0
    assert load_image(wire_path).width == 24


def test_cli_run_with_config(tmp_path, capsys):
    img_path = tmp_path / "img.pgm"
    save_image(smooth_blobs(24, seed=4), img_path)
    cfg = {
        "images": [str(img_path)],
        "densities": [0.3],
        "methods": ["tveq"],
        "seed": 1,
        "output_dir": str(tmp_path / "runout"),
        "tveq_options": {"max_iterations": 30},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = cli.main(["run", "--config", str(cfg_path)])
    assert code == 0
    assert (tmp_path / "runout" / "report.csv").exists()
    assert (tmp_path / "runout" / "report.md").exists()


def test_cli_run_key_value_overrides(tmp_path):
    img_path = tmp_path / "img.pgm"
    save_image(smooth_blobs(24, seed=5), img_path)
    code = cli.main([
        "run", "--out", str(tmp_path / "kvout"),
        f"images={img_path}", "densities=0.3", "methods=ista", "seed=2",
    ])
    assert code == 0
    report = read_report_csv(str(tmp_path / "kvout" / "report.csv"))
    assert report.rows[0].method == "ista"


def test_cli_validation_error_exit_code(tmp_path):
    assert cli.main(["run", "methods=bogus", f"images={tmp_path}/x.pgm"]) == 1
    assert cli.main(["metrics", "--ref", "missing.pgm", "--test", "missing.pgm"]) == 1


def test_cli_partial_failure_exit_code(tmp_path, monkeypatch, capsys):
    img_path = tmp_path / "img.pgm"
    save_image(smooth_blobs(24, seed=6), img_path)

    def boom(*a, **k):
        raise RuntimeError("nope")

    monkeypatch.setattr(bench.cs, "reconstruct_ista", boom)
    code = cli.main([
        "run", "--out", str(tmp_path / "pf"),
        f"images={img_path}", "densities=0.3", "methods=ista,tveq",
    ])
    assert code == 2  # partial failure: some cells flagged
