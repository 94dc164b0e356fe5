"""Command-line driver.

Subcommands: mesh, relax, extract, refine-mesh, refine-sphere, pipeline,
report. Configuration comes from an optional key=value file plus flag
overrides; every run directory echoes the exact configuration used.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import contour, mesh as mesh_mod, meshopt, pipeline, relax, spherearc


def _add_common(p):
    p.add_argument("--surface", default="sphere",
                   choices=["sphere", "torus", "double-torus", "bc4"])
    p.add_argument("--resolution", type=int, default=None,
                   help="sphere: subdivisions; implicit surfaces: grid cells per axis")


def _parse_seeds(args):
    if args.seeds:
        return [int(s) for s in args.seeds.split(",") if s]
    return [args.seed]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="geopart",
        description="Equal-area minimal-perimeter partitions of surfaces",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate a surface mesh and write OFF")
    _add_common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("relax", help="run the relaxation continuation")
    _add_common(p)
    p.add_argument("--n", type=int, required=True, dest="n_phases")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=800)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("extract", help="extract partition topology from a relax run")
    p.add_argument("--run", required=True, help="relax output directory")
    p.add_argument("--out", default=None, help="topology file (default: in run dir)")

    p = sub.add_parser("refine-mesh", help="on-mesh constrained refinement")
    p.add_argument("--run", required=True, help="relax output directory")
    p.add_argument("--out", default=None, help="output directory (default: run dir)")

    p = sub.add_parser("refine-sphere", help="circle-arc refinement on the sphere")
    p.add_argument("--run", required=True, help="relax output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-penalty-target", type=float, default=5e-7,
                   help="area tolerance, relative to total area")
    p.add_argument("--out", default=None)

    p = sub.add_parser("pipeline", help="full pipeline over a list of seeds")
    p.add_argument("--surface", default=None,
                   choices=["sphere", "torus", "double-torus", "bc4"])
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--n", type=int, default=None, dest="n_phases")
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", default=None, help="comma-separated seed list")
    p.add_argument("--refinement", default=None,
                   choices=["sphere-arc", "mesh-based"])
    p.add_argument("--eps-penalty-target", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("report", help="summarize pipeline runs into a CSV")
    p.add_argument("--runs", nargs="+", required=True, help="pipeline output dirs")
    p.add_argument("--out", required=True, help="CSV path")
    return parser


def _load_relax_run(run_dir):
    run = Path(run_dir)
    m = mesh_mod.read_off(run / "mesh.off")
    dens = _read_vtk_densities(run / "densities.vtk", m.num_vertices)
    return m, dens


def _read_vtk_densities(path, n_points):
    fields = []
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        if lines[i].startswith("SCALARS"):
            vals = []
            i += 2  # skip LOOKUP_TABLE
            while len(vals) < n_points:
                vals.extend(float(x) for x in lines[i].split())
                i += 1
            fields.append(vals)
        else:
            i += 1
    return np.array(fields).T


def cmd_mesh(args):
    cfg = pipeline.PipelineConfig(surface=args.surface, resolution=args.resolution)
    m = pipeline.build_surface_mesh(cfg)
    mesh_mod.write_off(m, args.out)
    stats = m.statistics()
    print(" ".join(f"{k}={v}" for k, v in stats.items()))
    return 0


def cmd_relax(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = pipeline.PipelineConfig(
        surface=args.surface, n_phases=args.n_phases, levels=args.levels,
        seeds=[args.seed], resolution=args.resolution,
        relax_max_iterations=args.max_iterations,
    )
    (out / "config.txt").write_text(cfg.to_text(), encoding="ascii")
    base = pipeline.build_surface_mesh(cfg)
    rcfg = relax.RelaxConfig(n_phases=args.n_phases, seed=args.seed,
                             max_iterations=args.max_iterations)
    dens, level, trace = relax.continuation(base, rcfg, args.levels)
    mesh_mod.write_off(level.mesh, out / "mesh.off")
    relax.write_density_vtk(out / "densities.vtk", level.mesh, dens)
    residuals = relax.constraint_residuals(dens, level.weights, level.area)
    relax.write_relax_report(out / "relax_report.txt", trace, residuals)
    print(f"final energy {trace[-1]['energy']:.8g} on {level.mesh.num_vertices} vertices")
    return 0


def cmd_extract(args):
    m, dens = _load_relax_run(args.run)
    topo = contour.extract(contour.label(dens), m)
    out = Path(args.out) if args.out else Path(args.run) / "topology.txt"
    contour.write_topology(out, topo)
    print(f"cells={len(topo.loops)} voids={len(topo.voids)} "
          f"raw_perimeter={contour.raw_perimeter(topo, m):.8g}")
    return 0


def cmd_refine_mesh(args):
    m, dens = _load_relax_run(args.run)
    out = Path(args.out) if args.out else Path(args.run)
    out.mkdir(parents=True, exist_ok=True)
    state, rep = meshopt.optimize_partition(m, contour.label(dens))
    meshopt.write_contours_obj(out / "contours.obj", state)
    meshopt.write_refine_report(out / "refine_report.txt", rep)
    print(f"single={rep.single_count_length:.8g} double={rep.double_count_length:.8g} "
          f"residual={rep.max_area_residual:.3e} restarts={rep.restarts}")
    return 0


def cmd_refine_sphere(args):
    m, dens = _load_relax_run(args.run)
    out = Path(args.out) if args.out else Path(args.run)
    out.mkdir(parents=True, exist_ok=True)
    topo = contour.extract(contour.label(dens), m)
    part = spherearc.lift_from_mesh(topo, m)
    schedule = spherearc.PatternSearchConfig(
        seed=args.seed, area_tol=args.eps_penalty_target * m.area()
    )
    optimized, info = spherearc.pattern_search(part, schedule)
    spherearc.write_arcs(out / "arcs.txt", optimized)
    spherearc.write_arc_report(out / "arc_report.txt", optimized)
    print(f"single={info['single_count_perimeter']:.8g} "
          f"area_imbalance={info['max_pairwise_area_diff']:.3e}")
    return 0


def cmd_pipeline(args):
    if args.config:
        cfg = pipeline.PipelineConfig.from_text(
            Path(args.config).read_text(encoding="ascii"))
    else:
        cfg = pipeline.PipelineConfig()
    if args.surface is not None:
        cfg.surface = args.surface
    if args.n_phases is not None:
        cfg.n_phases = args.n_phases
    if args.levels is not None:
        cfg.levels = args.levels
    if args.resolution is not None:
        cfg.resolution = args.resolution
    if args.refinement is not None:
        cfg.refinement = args.refinement
    if args.eps_penalty_target is not None:
        cfg.area_tol_target = args.eps_penalty_target
    seeds = _parse_seeds(args)
    if seeds:
        cfg.seeds = seeds
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.__post_init__()
    result = pipeline.run_pipeline(cfg)
    best = result.best
    print(f"best seed {best.seed}: single={best.single_count_length:.8g} "
          f"double={best.double_count_length:.8g} "
          f"residual={best.max_area_residual:.3e}")
    return 0


def cmd_report(args):
    results = []
    for run in args.runs:
        run = Path(run)
        cfg = pipeline.PipelineConfig.from_text(
            (run / "config.txt").read_text(encoding="ascii"))
        seed_results = _read_cost_table(run / "cost_table.csv")
        timings = {}
        timing_file = run / "timings.txt"
        if timing_file.exists():
            for line in timing_file.read_text(encoding="ascii").splitlines():
                seed, t = line.split()
                timings[int(seed)] = float(t)
        for r in seed_results:
            r.wall_time_s = timings.get(r.seed, 0.0)
        ok = [r for r in seed_results if r.status == "ok"]
        best = min(ok, key=lambda r: r.single_count_length) if ok else None
        results.append(pipeline.PipelineResult(
            cfg, cfg.surface, cfg.n_phases, seed_results, best, run))
    out = Path(args.out)
    rows = pipeline.report(results, out, out.with_suffix(".txt"))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _read_cost_table(path):
    results = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = dict(zip(header, line.strip().split(",")))
            results.append(pipeline.SeedResult(
                seed=int(vals["seed"]),
                single_count_length=float(vals["single_count_length"]),
                double_count_length=float(vals["double_count_length"]),
                max_area_residual=float(vals["max_area_residual"]),
                restarts=int(vals["restarts"]),
                wall_time_s=0.0,
                status=vals["status"],
            ))
    return results


COMMANDS = {
    "mesh": cmd_mesh,
    "relax": cmd_relax,
    "extract": cmd_extract,
    "refine-mesh": cmd_refine_mesh,
    "refine-sphere": cmd_refine_sphere,
    "pipeline": cmd_pipeline,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
