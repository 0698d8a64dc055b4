"""Command line: ``eprtrack run|sweep|calibrate``.

Exit codes: 0 success, 2 scenario schema error (or bad usage), 3 physics or
range violation, 4 I/O error. The output directory is ``--out-dir``, else
``$EPRTRACK_OUT_DIR``, else the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import trajectory_error
from .gaussian import UnphysicalStateError
from .scenario import (
    SWEEP_PARAMETERS,
    RunResult,
    ScenarioSchemaError,
    bundled_scenarios,
    calibrate_scenario,
    load_scenario,
    run_scenario,
    sweep,
)

OUT_DIR_ENV = "EPRTRACK_OUT_DIR"
EXIT_OK, EXIT_SCHEMA, EXIT_PHYSICS, EXIT_IO = 0, 2, 3, 4
RECORDS_HEADER = "t,u,v,x_inferred,y_inferred"
SWEEP_COLUMNS = ("value", "product", "factor", "var_u", "var_v", "db_u", "db_v", "predicted")


def _out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUT_DIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _grid(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated numbers: {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty grid")
    return values


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _write_json(path: Path, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, default=_json_default)
        fh.write("\n")


def write_records_csv(path: Path, result: RunResult) -> None:
    rec = result.records
    xi, yi = result.model.infer(rec.u, rec.v)
    table = np.column_stack([rec.t, rec.u, rec.v, xi, yi])
    np.savetxt(path, table, delimiter=",", header=RECORDS_HEADER, comments="", fmt="%.17g")


def write_outputs(result: RunResult, out_dir: Path) -> dict:
    """Write every output named in the scenario; returns ``{kind: path}``."""
    outputs = result.scenario.outputs
    written = {}
    if outputs.get("records"):
        written["records"] = out_dir / outputs["records"]
        write_records_csv(written["records"], result)
    if outputs.get("windows"):
        written["windows"] = out_dir / outputs["windows"]
        per = np.asarray(result.summary.per_window_variances, dtype=float).reshape(-1, 2)
        table = np.column_stack([np.arange(len(per)), per])
        np.savetxt(written["windows"], table, delimiter=",", header="window,var_u,var_v",
                   comments="", fmt=["%d", "%.17g", "%.17g"])
    if outputs.get("residuals"):
        written["residuals"] = out_dir / outputs["residuals"]
        err = trajectory_error(result.records, result.scenario.trajectory, result.model)
        table = np.column_stack([result.records.t, err.residual_x, err.residual_y])
        np.savetxt(written["residuals"], table, delimiter=",", header="t,residual_x,residual_y",
                   comments="", fmt="%.17g")
    if outputs.get("summary"):
        written["summary"] = out_dir / outputs["summary"]
        _write_json(written["summary"], {
            "tool": "eprtrack",
            "version": __version__,
            "summary": result.summary.to_dict(),
            "calibration": result.calibration.to_dict() if result.calibration else None,
            "scenario": result.scenario.to_dict(),
        })
    return written


def _overrides(args) -> dict:
    return {"seed": args.seed, "tier": args.tier}


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario, _overrides(args))
    result = run_scenario(sc)
    written = write_outputs(result, _out_dir(args.out_dir))
    s = result.summary
    print(
        f"product_inferred={s.product_inferred:.6g} violation_factor={s.violation_factor_eq2:.6g} "
        f"var_u={s.var_u:.6g} var_v={s.var_v:.6g} classification={s.classification}"
    )
    for kind, path in written.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario, _overrides(args))
    rows = sweep(sc, args.parameter, args.grid, jobs=args.jobs)
    path = _out_dir(args.out_dir) / (sc.outputs.get("sweep") or "sweep.csv")
    table = np.array([[row[c] for c in SWEEP_COLUMNS] for row in rows], dtype=float)
    np.savetxt(path, table, delimiter=",", header=",".join(SWEEP_COLUMNS), comments="", fmt="%.17g")
    for row in rows:
        print(f"{args.parameter}={row['value']:g} product={row['product']:.6g} factor={row['factor']:.6g}")
    print(f"sweep: {path}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    sc = load_scenario(args.scenario, _overrides(args))
    scale = calibrate_scenario(sc)
    path = _out_dir(args.out_dir) / (sc.outputs.get("calibration") or "calibration.json")
    _write_json(path, {
        "tool": "eprtrack",
        "version": __version__,
        "calibration": scale.to_dict(),
        "scenario": sc.to_dict(),
    })
    print(f"scale_u={scale.scale_u:.6g} scale_v={scale.scale_v:.6g}")
    print(f"calibration: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the scenario's master seed")
    common.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    common.add_argument("--tier", choices=["baseband", "rf"], help="override the scenario's tier")

    parser = argparse.ArgumentParser(
        prog="eprtrack",
        description="Simulate and analyse entanglement-assisted simultaneous quadrature measurements.",
        epilog="bundled scenarios: " + ", ".join(bundled_scenarios()),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario; writes records.csv and summary.json")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="repeat a scenario over a parameter grid")
    p.add_argument("parameter", choices=sorted(SWEEP_PARAMETERS))
    p.add_argument("grid", type=_grid, help="comma-separated values, e.g. 1.0,0.9,0.7")
    p.add_argument("scenario")
    p.add_argument("--jobs", type=int, default=1, help="grid points run in parallel")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", parents=[common], help="write calibration.json from a vacuum run")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ScenarioSchemaError as exc:
        for line in exc.errors:
            print(f"schema error: {line}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValueError, UnphysicalStateError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
