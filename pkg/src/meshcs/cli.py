"""Command-line interface.

Subcommands: run (full benchmark from a config file), reconstruct (single
image/method/density cell), metrics (PSNR/SSIM between two images), and
mesh-render (wireframe of an exported mesh). Exit codes: 0 success,
1 validation error, 2 partial failure (some cells flagged).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import bench, cs, metrics
from .ama import AmaConfig, ama_represent
from .imgio import load_image, quantize, save_image
from .mesh import load_mesh_text


def _parse_overrides(pairs: list[str]) -> dict:
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"override {pair!r} is not key=value")
        key, val = pair.split("=", 1)
        if key in ("images", "methods"):
            out[key] = val.split(",")
        elif key == "densities":
            out[key] = [float(v) for v in val.split(",")]
        elif key == "seed":
            out[key] = int(val)
        elif key in ("output_dir", "sensing_domain", "sensing_sampling"):
            out[key] = val
        else:
            raise ValueError(f"unknown experiment key {key!r}")
    return out


def _cmd_run(args) -> int:
    spec_dict = {}
    if args.config:
        with open(args.config) as fh:
            spec_dict = json.load(fh)
    spec_dict.update(_parse_overrides(args.overrides))
    if args.out:
        spec_dict["output_dir"] = args.out
    spec = bench.ExperimentSpec.from_dict(spec_dict)
    spec.validate()
    report = bench.run_experiment(spec)
    csv_path, md_path = bench.write_report(report, spec.output_dir)
    for row in report.rows:
        status = row.error if row.error else (
            f"PSNR {bench._fmt_md(row.psnr_db)} dB  SSIM {bench._fmt_md(row.ssim)}"
        )
        print(f"{row.image} {row.method} d={row.density:g}: {status}")
    print(f"wrote {csv_path} and {md_path}")
    return 2 if any(row.error for row in report.rows) else 0


def _cmd_reconstruct(args) -> int:
    img = load_image(args.image)
    name = bench._image_name(args.image)
    spec = bench.ExperimentSpec(images=[args.image], output_dir=args.out)
    recon, mesh, iterations, converged = bench._reconstruct(
        img, args.method, args.density, args.seed, spec
    )
    recon_q = quantize(recon)
    bench._write_cell_outputs(spec, name, args.method, args.density, img, recon_q, mesh)
    p = metrics.psnr(img, recon_q)
    s = metrics.ssim(img, recon_q).mean_ssim
    print(
        f"{name} {args.method} d={args.density:g}: PSNR "
        f"{'inf' if math.isinf(p) else f'{p:.2f}'} dB  SSIM {s:.4f}  "
        f"({iterations} iterations, {'converged' if converged else 'not converged'})"
    )
    return 0


def _cmd_metrics(args) -> int:
    ref = load_image(args.ref)
    test = load_image(args.test)
    p = metrics.psnr(ref, test)
    result = metrics.ssim(ref, test)
    print(f"PSNR: {'inf' if math.isinf(p) else f'{p:.4f}'} dB")
    print(f"SSIM: {result.mean_ssim:.6f}")
    if args.map_out:
        save_image(metrics.ssim_map_to_image(result), args.map_out)
        print(f"wrote SSIM map to {args.map_out}")
    return 0


def _cmd_mesh_render(args) -> int:
    mesh = load_mesh_text(args.mesh)
    if args.width and args.height:
        dims = (args.height, args.width)
    else:
        w = int(mesh.vertices[:, 0].max()) + 1
        h = int(mesh.vertices[:, 1].max()) + 1
        dims = (h, w)
    save_image(bench.render_wireframe(mesh, dims), args.out)
    print(f"wrote wireframe to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshcs",
        description="Compare compressive-sampling and mesh-based image representation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full benchmark experiment")
    p_run.add_argument("--config", help="JSON file mirroring ExperimentSpec")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument(
        "overrides", nargs="*",
        help="key=value overrides (images, densities, methods, seed, ...)",
    )
    p_run.set_defaults(func=_cmd_run)

    p_rec = sub.add_parser("reconstruct", help="reconstruct one image with one method")
    p_rec.add_argument("--image", required=True)
    p_rec.add_argument("--method", required=True, choices=bench.METHODS)
    p_rec.add_argument("--density", required=True, type=float)
    p_rec.add_argument("--seed", type=int, default=0)
    p_rec.add_argument("--out", required=True)
    p_rec.set_defaults(func=_cmd_reconstruct)

    p_met = sub.add_parser("metrics", help="PSNR and SSIM between two images")
    p_met.add_argument("--ref", required=True)
    p_met.add_argument("--test", required=True)
    p_met.add_argument("--map-out", help="also write the SSIM map as PGM")
    p_met.set_defaults(func=_cmd_metrics)

    p_msh = sub.add_parser("mesh-render", help="render an exported mesh wireframe")
    p_msh.add_argument("--mesh", required=True)
    p_msh.add_argument("--out", required=True)
    p_msh.add_argument("--width", type=int)
    p_msh.add_argument("--height", type=int)
    p_msh.set_defaults(func=_cmd_mesh_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
