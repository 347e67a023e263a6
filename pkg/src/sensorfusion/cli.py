"""
Command-line pipeline: ``simulate``, ``reconstruct``, ``evaluate``,
``ablate``, ``propagate`` and ``scan-gen``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
numerical failures.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import io
from .config import RunConfig, dump_config, load_config
from .errors import NumericalError, ValidationError
from .evaluation import (detection_na, format_visibility_table, fringe_visibility,
                         normalize_transmittance, theoretical_resolution)
from .experiments import build_experiment, noise_spec, run_ablation
from .forward import SceneModel
from .grid import ComplexField, GridSpec
from .optimization import format_loss_table, reconstruct
from .propagation import propagate_asm, propagate_padded_oracle, propagate_shifted_asm
from .scan import overlap_fraction, poisson_disk, write_scan
from .simulator import (clear_region, ladder_target, line_set_regions, make_probe,
                        simulate_dataset)


def _load(args):
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _say(args, text):
    if not args.quiet:
        print(text)


def _outdir(args):
    os.makedirs(args.output, exist_ok=True)
    return args.output


def _select(config, names):
    if not names:
        return config
    wanted = [n.strip() for n in names.split(",") if n.strip()]
    known = {s.name: s for s in config.sensors}
    missing = [n for n in wanted if n not in known]
    if missing:
        raise ValidationError(f"unknown sensor(s) {missing}; config has {sorted(known)}")
    return replace(config, sensors=tuple(known[n] for n in wanted))


def geometry_summary(config, scene):
    g = config.geometry
    sensors = scene.sensors
    na_illum = config.evaluation.na_illum
    lines = [
        f"object grid      {scene.object.grid.ny} x {scene.object.grid.nx} px at {g.pitch * 1e6:.3g} um",
        f"probe            {g.probe_pixels} px grid, diameter {config.probe.diameter * 1e3:.3g} mm",
        f"scan positions   {len(scene.scan)} (r = {config.scan.min_distance * 1e3:.3g} mm)",
    ]
    if len(scene.scan) > 1:
        lines.append(f"overlap fraction {overlap_fraction(scene.scan, config.probe.diameter):.3f}")
    for s in sensors:
        na = detection_na(s, g.pitch)
        lines.append(f"sensor {s.name:<9} {s.height} x {s.width} px, x0 = {s.x0 * 1e3:.4g} mm, "
                     f"z = {s.z * 1e3:.4g} mm, exposure {s.exposure_weight:g}, NA_det {na:.4f}, "
                     f"period limit {theoretical_resolution(g.wavelength, na_illum, na) * 1e6:.2f} um")
    return "\n".join(lines)


def cmd_simulate(args):
    config = _select(_load(args), args.sensors)
    out = _outdir(args)
    exp = build_experiment(config)
    dataset = simulate_dataset(exp.scene, noise_spec(config))
    io.write_dataset(os.path.join(out, "dataset.ptyf"), dataset)
    io.write_field(os.path.join(out, "object_true.ptyf"), exp.scene.object)
    io.write_field(os.path.join(out, "probe.ptyf"), exp.scene.probe)
    write_scan(exp.scene.scan, os.path.join(out, "scan.txt"))
    dump_config(config, os.path.join(out, "config.json"))
    _say(args, geometry_summary(config, exp.scene))
    _say(args, f"wrote {dataset.n_frames} frames to {out}")
    return 0


def _scene_for(dataset, config, probe_path=None):
    g = config.geometry
    grid = GridSpec.square(g.probe_pixels, g.pitch, g.wavelength)
    if dataset.grid != grid:
        raise ValidationError("dataset grid does not match the config geometry")
    if probe_path:
        probe, _ = io.read_field(probe_path)
    else:
        probe = make_probe(grid, config.probe.diameter, config.probe.edge_smoothing)
    obj_grid = grid.resized(*dataset.object_shape)
    ones = ComplexField(obj_grid, np.ones(obj_grid.shape))
    return SceneModel(ones, probe, dataset.scan, dataset.sensors, dataset.origin_px)


def cmd_reconstruct(args):
    config = _load(args)
    out = _outdir(args)
    dataset = io.read_dataset(args.dataset)
    if args.sensors:
        dataset = dataset.select_sensors([n.strip() for n in args.sensors.split(",") if n.strip()])
    rc = config.reconstruction
    if args.epochs is not None:
        rc = replace(rc, epochs=args.epochs, gamma_switch_epoch=min(rc.gamma_switch_epoch, args.epochs))
    if all(s.on_axis for s in dataset.sensors):
        rc = replace(rc, gamma_initial=0.0, gamma_final=0.0)
    scene = _scene_for(dataset, config, args.probe)

    def report(r, _):
        if not args.quiet:
            print(f"epoch {r.epoch:3d}  gamma {r.gamma:.2f}  mse_on {r.mse_on:.6g}  "
                  f"mse_off {r.mse_off:.6g}  loss {r.loss:.6g}", flush=True)

    result = reconstruct(dataset, scene, rc, callback=report)
    io.write_field(os.path.join(out, "reconstruction.ptyf"), result.object, origin_px=list(dataset.origin_px))
    if rc.optimize_probe:
        io.write_field(os.path.join(out, "probe_reconstructed.ptyf"), result.probe)
    with open(os.path.join(out, "loss.tsv"), "w", encoding="utf-8") as fh:
        fh.write(format_loss_table(result.history))
    layout = _evaluation_layout(config, result.object.grid)
    t = normalize_transmittance(result.object, layout["clear"], kind=config.evaluation.transmittance)
    io.write_pgm(os.path.join(out, "transmittance.pgm"), t.values)
    _say(args, f"wrote reconstruction, loss table and image to {out}")
    return 0


def _evaluation_layout(config, obj_grid):
    tc = config.target
    target = ladder_target(tuple(tc.ladder), tc.bar_length_factor, tc.gap)
    return {"regions": line_set_regions(obj_grid, target), "clear": clear_region(obj_grid, target)}


def cmd_evaluate(args):
    config = _load(args)
    obj, _ = io.read_field(args.reconstruction)
    layout = _evaluation_layout(config, obj.grid)
    ev = config.evaluation
    t = normalize_transmittance(obj, layout["clear"], kind=ev.transmittance)
    reports = [fringe_visibility(t, r, prominence=ev.prominence) for r in layout["regions"]]
    table = format_visibility_table({args.label: reports})
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        with open(os.path.join(args.output, "visibility.tsv"), "w", encoding="utf-8") as fh:
            fh.write(table)
    print(table, end="")
    return 0


def cmd_ablate(args):
    config = _load(args)
    out = _outdir(args)

    def progress(name, item):
        _say(args, f"finished {name}")
        with open(os.path.join(out, f"loss_{name}.tsv"), "w", encoding="utf-8") as fh:
            fh.write(format_loss_table(item[0].history))

    dataset, results = run_ablation(config, progress=progress)
    io.write_dataset(os.path.join(out, "ablation_dataset.ptyf"), dataset)
    table = format_visibility_table({name: reps for name, (_, reps) in results.items()})
    with open(os.path.join(out, "ablation.tsv"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    return 0


def cmd_propagate(args):
    field, meta = io.read_field(args.input)
    window = tuple(args.window) if args.window else None
    if args.method == "asm":
        result = propagate_asm(field, args.z, pad=args.pad)
    elif args.method == "shifted":
        result = propagate_shifted_asm(field, args.z, args.x0, args.y0, window=window)
    else:
        result = propagate_padded_oracle(field, args.z, args.x0, args.y0, args.pad_factor, window=window)
    os.makedirs(os.path.dirname(os.path.abspath(args.output_file)), exist_ok=True)
    io.write_field(args.output_file, result, z=args.z, x0=args.x0, y0=args.y0, method=args.method)
    _say(args, f"wrote {result.values.shape[0]} x {result.values.shape[1]} field to {args.output_file}")
    return 0


def cmd_scan_gen(args):
    config = _load(args)
    out = _outdir(args)
    sc = config.scan
    scan = poisson_disk(sc.region, sc.min_distance, sc.count, sc.seed)
    write_scan(scan, os.path.join(out, "scan.txt"))
    frac = overlap_fraction(scan, config.probe.diameter) if len(scan) > 1 else float("nan")
    _say(args, f"{len(scan)} positions, r = {sc.min_distance:g} m, overlap fraction {frac:.3f}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: built-in full-size geometry)")
    common.add_argument("--seed", type=int, help="override every random seed")
    common.add_argument("--output", default=".", help="output directory")
    common.add_argument("--sensors", help="comma-separated sensor names to use")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="sensorfusion", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a dataset and ground truth")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct an object from a dataset")
    p.add_argument("dataset")
    p.add_argument("--probe", help="probe container (default: regenerate from config)")
    p.add_argument("--epochs", type=int, help="override the epoch count")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", parents=[common], help="fringe-visibility table of a reconstruction")
    p.add_argument("reconstruction")
    p.add_argument("--label", default="V")
    p.set_defaults(func=cmd_evaluate, output=None)

    p = sub.add_parser("ablate", parents=[common], help="sensor-configuration ladder")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("propagate", parents=[common], help="propagate one stored field")
    p.add_argument("input")
    p.add_argument("output_file")
    p.add_argument("--z", type=float, required=True, help="distance in meters")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--method", choices=("asm", "shifted", "oracle"), default="shifted")
    p.add_argument("--pad", action="store_true", help="zero-pad plain ASM")
    p.add_argument("--pad-factor", type=int, default=4)
    p.add_argument("--window", type=int, nargs=2, metavar=("NY", "NX"))
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("scan-gen", parents=[common], help="generate and export a scan pattern")
    p.set_defaults(func=cmd_scan_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
