"""Command-line interface: simulate scenarios, sweep poses, export maps,
compare against measured responses, and self-check against the oracle.

All outputs are CSV with ``#`` metadata headers; numeric columns are
deterministic for a given scenario and package version. Exit codes:
0 success, 2 input error, 3 capacity error, 4 oracle or threshold failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, _kernels, assembler, diffuse, scenario as scenario_mod
from .errors import CapacityError, GridMismatchError, LifichanError
from .scenario import bundled_scenario_path
from .scene import FrequencyGrid, Scene

COMPONENTS = ("los", "diff2", "tail", "total")
_COMPONENT_ATTR = {"los": "los", "diff2": "diffuse", "tail": "tail", "total": "total"}


def _load_scenario(path_or_name: str) -> scenario_mod.Scenario:
    if os.path.exists(path_or_name):
        return scenario_mod.load_scenario(path_or_name)
    bundled = bundled_scenario_path(path_or_name)
    if bundled.is_file():
        return scenario_mod.loads_scenario(bundled.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no such scenario file or bundled scenario: {path_or_name}")


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form; deterministic for equal doubles."""
    return repr(float(value))


def _mag_db(value: complex, scale: float) -> float:
    mag = abs(value)
    return -math.inf if mag == 0.0 else scale * math.log10(mag)


def _meta_lines(scene: Scene, grid: FrequencyGrid, scn_name: str) -> list:
    return [
        f"# lifichan {__version__}",
        f"# scenario: {scn_name}",
        f"# dx_m: {_fmt(scene.dx)}  n_patches: {len(scene.patches)}  "
        f"dt_s: {_fmt(scene.time_resolution)}",
        f"# grid_hz: {_fmt(grid.samples[0])} .. {_fmt(grid.f_max)} ({len(grid)} samples)",
    ]


def _write_link_csv(path, tf, scene, grid, scn_name, db_scale):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        for line in _meta_lines(scene, grid, scn_name):
            handle.write(line + "\n")
        handle.write("# units: freq_hz in Hz, re/im dimensionless, mag_db in dB\n")
        writer = csv.writer(handle)
        writer.writerow(["freq_hz", "re", "im", "mag_db", "component"])
        for component in COMPONENTS:
            attr = _COMPONENT_ATTR[component]
            values = tf.samples if attr == "total" else getattr(tf, attr)
            for f, v in zip(grid.samples, values):
                writer.writerow([_fmt(f), _fmt(v.real), _fmt(v.imag),
                                 _fmt(_mag_db(v, db_scale)), component])


def _write_run_meta(out_dir, scene, grid, scn_name, timings, extra=None):
    meta = {
        "version": __version__,
        "scenario": scn_name,
        "backend": _kernels.active_backend(),
        "dx_m": scene.dx,
        "dt_s": scene.time_resolution,
        "n_patches": len(scene.patches),
        "n_emitters": len(scene.emitters),
        "n_detectors": len(scene.detectors),
        "grid": {"f_min_hz": grid.samples[0], "f_max_hz": grid.f_max, "n": len(grid)},
        "timings_s": timings,
    }
    if extra:
        meta.update(extra)
    with open(os.path.join(out_dir, "run_meta.json"), "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _apply_common(args) -> None:
    if args.threads is not None:
        _kernels.set_num_threads(args.threads)


def _scene_grid_options(args):
    scn = _load_scenario(args.scenario)
    scene = scn.build_scene(dx=args.dx)
    grid = scn.grid(f_max=args.fmax, step=args.fstep)
    options = scn.options(
        bounces=args.bounces,
        include_tail=None if args.tail is None else args.tail == "on",
    )
    return scn, scene, grid, options


def cmd_simulate(args) -> int:
    _apply_common(args)
    scn, scene, grid, options = _scene_grid_options(args)
    db_scale = 20.0 if args.db_convention == "20log" else 10.0
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    matrix = assembler.mimo_matrix(scene, grid, options)
    elapsed = time.perf_counter() - t0
    for r, rx in enumerate(scene.detectors):
        for t, tx in enumerate(scene.emitters):
            name = f"link_{rx.name or f'rx{r + 1}'}_{tx.name or f'tx{t + 1}'}.csv"
            _write_link_csv(os.path.join(args.out, name), matrix.entry(r, t),
                            scene, grid, scn.name, db_scale)
    _write_run_meta(args.out, scene, grid, scn.name, {"mimo_matrix": elapsed},
                    {"n_links": len(scene.detectors) * len(scene.emitters)})
    print(f"{len(scene.detectors) * len(scene.emitters)} links -> {args.out} "
          f"({elapsed:.2f} s, backend {_kernels.active_backend()})")
    return 0


def _read_poses(path):
    poses = []
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row and not row[0].startswith("#")]
    if not rows:
        raise LifichanError(f"poses file {path} is empty")
    header = [h.strip() for h in rows[0]]
    required = ["x", "y", "z"]
    if header[: len(required)] != required:
        raise LifichanError(f"poses file must start with columns x,y,z; got {header}")
    has_orientation = header[3:6] == ["ox", "oy", "oz"]
    for row in rows[1:]:
        values = [float(v) for v in row]
        position = values[0:3]
        orientation = values[3:6] if has_orientation else (0.0, 0.0, 1.0)
        poses.append(assembler.Pose(np.array(position), np.array(orientation)))
    return poses


def cmd_sweep(args) -> int:
    _apply_common(args)
    scn, scene, grid, options = _scene_grid_options(args)
    poses = _read_poses(args.poses)
    query = args.freq if args.freq is not None else scn.simulation.query_frequency
    trace = assembler.mobility_sweep(
        scene, poses, grid, options, rx_template_index=0, query_frequency=query
    )
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "sweep.csv")
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        for line in _meta_lines(scene, grid, scn.name):
            handle.write(line + "\n")
        handle.write(f"# query_frequency_hz: {_fmt(query)}  "
                     f"norm_offset_db: {_fmt(args.norm_offset_db)}\n")
        writer = csv.writer(handle)
        writer.writerow(["pose_idx", "x", "y", "z", "tx_id", "distance_m", "gain_db_at_query"])
        for p, pose in enumerate(trace.poses):
            for t, tx in enumerate(trace.emitters):
                writer.writerow([
                    p, _fmt(pose.position[0]), _fmt(pose.position[1]), _fmt(pose.position[2]),
                    tx.name or f"tx{t + 1}", _fmt(trace.distances[p, t]),
                    _fmt(trace.gains_db[p, t] + args.norm_offset_db),
                ])
    per_pose = trace.pose_seconds.mean()
    _write_run_meta(args.out, scene, grid, scn.name,
                    {"workspace_build": trace.workspace_seconds,
                     "mean_per_pose": per_pose},
                    {"n_poses": len(poses), "query_frequency_hz": query})
    print(f"{len(poses)} poses x {len(trace.emitters)} tx -> {out_path}")
    print(f"workspace build {trace.workspace_seconds:.2f} s, "
          f"mean per-pose {per_pose * 1e3:.1f} ms (cache reused)")
    return 0


def cmd_heatmap(args) -> int:
    _apply_common(args)
    scn = _load_scenario(args.scenario)
    scene = scn.build_scene(dx=args.dx)
    if not scene.detectors:
        raise LifichanError("heatmap needs a detector template in the scenario")
    spec = assembler.HeatmapSpec(args.step, args.step, args.height, scene.detectors[0])
    field = assembler.dc_heatmap(scene, spec)
    values = field.values
    if args.units == "db":
        with np.errstate(divide="ignore"):
            values = 10.0 * np.log10(values)
    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        handle.write(f"# lifichan {__version__}\n# scenario: {scn.name}\n")
        handle.write(f"# height_m: {_fmt(args.height)}  units: "
                     f"{'dBW' if args.units == 'db' else 'W'}\n")
        writer = csv.writer(handle)
        writer.writerow(["y_m\\x_m"] + [_fmt(x) for x in field.x])
        for iy, y in enumerate(field.y):
            writer.writerow([_fmt(y)] + [_fmt(v) for v in values[iy]])
    print(f"{values.shape[1]} x {values.shape[0]} map -> {args.out}")
    return 0


def _read_response_csv(path):
    """Read a response table: freq_hz plus re/im, mag, or mag_db columns."""
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row and not row[0].startswith("#")]
    if not rows:
        raise LifichanError(f"{path} contains no data")
    header = [h.strip() for h in rows[0]]
    idx = {name: header.index(name) for name in header}
    if "freq_hz" not in idx:
        raise LifichanError(f"{path} has no freq_hz column")
    records = rows[1:]
    if "component" in idx:
        records = [row for row in records if row[idx["component"]] == "total"]
    freqs = np.array([float(row[idx["freq_hz"]]) for row in records])
    if "re" in idx and "im" in idx:
        values = np.array([complex(float(r[idx["re"]]), float(r[idx["im"]])) for r in records])
        return freqs, values, True
    if "mag" in idx:
        return freqs, np.array([float(r[idx["mag"]]) for r in records]), False
    if "mag_db" in idx:
        mags = np.array([10.0 ** (float(r[idx["mag_db"]]) / 20.0) for r in records])
        return freqs, mags, False
    raise LifichanError(f"{path} needs re/im, mag, or mag_db columns")


def cmd_compare(args) -> int:
    f_sim, h_sim, sim_complex = _read_response_csv(args.sim)
    f_meas, h_meas, meas_complex = _read_response_csv(args.meas)
    if f_sim.shape != f_meas.shape or not np.array_equal(f_sim, f_meas):
        raise GridMismatchError("simulated and measured files use different frequency grids")
    mode = args.mode
    if mode == "complex" and not (sim_complex and meas_complex):
        print("note: amplitude-only input, falling back to amplitude MSE")
        mode = "amplitude"
    mse = assembler.relative_mse_arrays(h_meas, h_sim, mode=mode)
    verdict = "PASS" if mse <= args.threshold else "FAIL"
    print(f"relative MSE: {mse:.4f}% (threshold {args.threshold:.2f}%): {verdict}")
    return 0 if verdict == "PASS" else 4


def _coarsen_dx(scn, max_patches: int) -> float:
    room = scn.room
    dx = float(min(room.length_x, room.width_y, room.height_z))
    if len(scn.build_scene(dx=dx).patches) > max_patches:
        raise LifichanError(
            f"cannot tile this room with fewer than {max_patches} patches"
        )
    while True:
        trial = dx / 1.3
        if len(scn.build_scene(dx=trial).patches) > max_patches:
            return dx
        dx = trial


def cmd_oracle(args) -> int:
    _apply_common(args)
    scn = _load_scenario(args.scenario)
    if not scn.emitters or not scn.detectors:
        raise LifichanError("oracle check needs at least one emitter and one detector")
    dx = _coarsen_dx(scn, args.max_patches)
    scene = scn.build_scene(dx=dx)
    f_max = scn.grid().f_max
    grid = FrequencyGrid(np.linspace(0.0, f_max, 32))
    tx, rx = scene.emitters[0], scene.detectors[0]

    bounces = 1 if args.inject_fault == "drop-second-bounce" else 2
    operator = diffuse.build_intrinsic(scene)
    field = diffuse.source_field(operator, tx, grid, bounces=bounces)
    fast = diffuse.diffuse_response(field, rx, grid).diffuse
    oracle = diffuse.brute_force_two_bounce(scene, tx, rx, grid).diffuse

    scale = np.abs(oracle).max()
    deviation = np.abs(fast - oracle).max() / scale if scale > 0.0 else np.abs(fast).max()
    verdict = "PASS" if deviation <= args.tolerance else "FAIL"
    print(f"N={len(scene.patches)} patches (dx={dx:.3f} m), 32 frequencies")
    print(f"max relative deviation vs brute force: {deviation:.3e} "
          f"(tolerance {args.tolerance:.1e}): {verdict}")
    return 0 if verdict == "PASS" else 4


def _add_common(parser, with_solver=True):
    parser.add_argument("--dx", type=float, default=None, help="override patch size in m")
    parser.add_argument("--threads", type=int, default=None,
                        help="thread count for compiled kernels (0 = auto)")
    if with_solver:
        parser.add_argument("--fmax", type=float, default=None, help="override max frequency in Hz")
        parser.add_argument("--fstep", type=float, default=None, help="override frequency step in Hz")
        parser.add_argument("--bounces", type=int, default=None,
                            help="patch-resolved diffuse reflections (default from scenario)")
        parser.add_argument("--tail", choices=("on", "off"), default=None,
                            help="include the higher-order diffuse tail")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lifichan",
        description="Frequency-domain indoor optical wireless channel simulator",
    )
    parser.add_argument("--version", action="version", version=f"lifichan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="compute all link responses of a scenario")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--db-convention", choices=("20log", "10log"), default="20log")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="evaluate receiver poses with cached operators")
    p.add_argument("scenario")
    p.add_argument("poses", help="CSV with columns x,y,z[,ox,oy,oz]")
    p.add_argument("--out", required=True)
    p.add_argument("--freq", type=float, default=None, help="gain query frequency in Hz")
    p.add_argument("--norm-offset-db", type=float, default=0.0,
                   help="calibration offset added to reported gains")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("heatmap", help="DC received-power map at a fixed height")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--step", type=float, default=0.1, help="grid step in m")
    p.add_argument("--height", type=float, default=1.0, help="receiver height in m")
    p.add_argument("--units", choices=("watt", "db"), default="watt")
    _add_common(p, with_solver=False)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("compare", help="relative MSE between two response tables")
    p.add_argument("sim")
    p.add_argument("meas")
    p.add_argument("--threshold", type=float, default=5.0, help="pass/fail threshold in percent")
    p.add_argument("--mode", choices=("complex", "amplitude"), default="complex")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="check the fast path against brute-force enumeration")
    p.add_argument("scenario")
    p.add_argument("--max-patches", type=int, default=150)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--inject-fault", choices=("none", "drop-second-bounce"), default="none")
    _add_common(p, with_solver=False)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (LifichanError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
