"""Scenario files: schema, loading, and end-to-end execution.

A scenario is a JSON object::

    {
      "schema": "eprtrack-scenario/1",
      "bench": {...BenchConfig fields...},
      "trajectory": {"kind": "zero", "duration": 0.026},
      "tier": "baseband" | "rf",
      "duration": 0.026,
      "seed": 1,
      "dsp": {...},            # optional, defaults below
      "analysis": {...},       # optional
      "calibration": "none" | {"mode": "auto", "duration": ...} | {"mode": "file", "path": ...},
      "repeats": 1,
      "reference": {"bench": {"entanglement_on": false}},   # optional
      "outputs": {"records": "records.csv", "summary": "summary.json", ...}
    }

Seed policy: one master seed per scenario. Every random stream is derived from
it with a tag naming its role (``main``, ``ref``, ``calib``), the repeat index
and the quadrature, plus the chunk index (see :mod:`eprtrack.seeding`).
Sweeps reuse the same seed at every grid point.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .analysis import (
    RunSummary,
    bound_check,
    chi2_band,
    product_rel_se,
    summarize,
    trajectory_error,
    windowed_variance,
)
from .bench import BenchConfig, ConfigError, ReadoutModel, build_bench, predicted_uncertainty_product
from .dsp import CalibrationScale, DemodChain, FirSpec, calibrate
from .records import Records
from .synth import n_records, simulate_baseband, synthesize_rf_chunks
from .trajectory import TrajectorySpec, Zero, evaluate, trajectory_from_dict

__all__ = [
    "SCHEMA",
    "SCHEMA_ID",
    "DspSettings",
    "RunResult",
    "Scenario",
    "ScenarioSchemaError",
    "bundled_scenarios",
    "calibrate_scenario",
    "load_scenario",
    "measure",
    "resolve_scenario_path",
    "rf_records",
    "run_scenario",
    "sweep",
    "SWEEP_PARAMETERS",
]

SCHEMA_ID = "eprtrack-scenario/1"
MIN_ANALYSIS_RECORDS = 260

_num = {"type": "number"}
_eff = {"type": "number", "minimum": 0, "maximum": 1}
_vis = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}

_TRAJ_REQUIRED = {
    "zero": ["duration"],
    "constant": ["x", "y", "duration"],
    "arc": ["radius", "phase_start", "phase_rate", "duration"],
    "spiral": ["radius_start", "radius_end", "phase_start", "phase_rate", "duration"],
    "waypoints": ["points"],
    "preset": ["name"],
    "scaled": ["factor", "base"],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "bench", "trajectory", "tier", "duration", "seed"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "bench": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "squeezer1_db": {"type": "number", "minimum": 0},
                "squeezer2_db": {"type": "number", "minimum": 0},
                "bs1_visibility": _vis,
                "bs3_visibility": _vis,
                "arm_loss_a": _eff,
                "arm_loss_b": _eff,
                "detector_efficiency": _eff,
                "bs2_reflectivity": _vis,
                "lo_phase_1": _num,
                "lo_phase_2": _num,
                "entanglement_on": {"type": "boolean"},
            },
        },
        "trajectory": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": sorted(_TRAJ_REQUIRED)}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": k}}, "required": ["kind"]},
                 "then": {"required": req}}
                for k, req in _TRAJ_REQUIRED.items()
            ],
        },
        "tier": {"enum": ["baseband", "rf"]},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "repeats": {"type": "integer", "minimum": 1},
        "dsp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sample_rate": {"type": "number", "exclusiveMinimum": 0},
                "carrier_f": {"type": "number", "exclusiveMinimum": 0},
                "noise_oversample_rate": {"type": "number", "exclusiveMinimum": 0},
                "out_dt": {"type": "number", "exclusiveMinimum": 0},
                "antialias_corner": {"type": ["number", "null"]},
                "antialias_numtaps": {"type": "integer", "minimum": 1},
                "demod_phase": {"type": ["number", "array"]},
                "broadband_floor": {"type": "boolean"},
                "floor_level": {"type": "number", "minimum": 0},
                "fir": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "cutoff": _num,
                        "transition_width": _num,
                        "rate": _num,
                        "window": {"enum": ["hamming", "hann", "blackman"]},
                    },
                },
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "window": {"type": "integer", "minimum": 2},
                "short_window": {"type": "integer", "minimum": 2},
                "endpoint_window": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "calibration": {
            "oneOf": [
                {"const": "none"},
                {
                    "type": "object",
                    "required": ["mode"],
                    "additionalProperties": False,
                    "properties": {
                        "mode": {"const": "auto"},
                        "duration": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                {
                    "type": "object",
                    "required": ["mode", "path"],
                    "additionalProperties": False,
                    "properties": {"mode": {"const": "file"}, "path": {"type": "string"}},
                },
            ]
        },
        "reference": {
            "type": "object",
            "required": ["bench"],
            "additionalProperties": False,
            "properties": {"bench": {"$ref": "#/properties/bench"}},
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "records": {"type": ["string", "null"]},
                "summary": {"type": ["string", "null"]},
                "windows": {"type": ["string", "null"]},
                "residuals": {"type": ["string", "null"]},
                "calibration": {"type": ["string", "null"]},
                "sweep": {"type": ["string", "null"]},
            },
        },
    },
}

DEFAULT_OUTPUTS = {
    "records": "records.csv",
    "summary": "summary.json",
    "windows": "windows.csv",
    "residuals": None,
    "calibration": "calibration.json",
    "sweep": "sweep.csv",
}


class ScenarioSchemaError(ValueError):
    """Scenario JSON that does not match :data:`SCHEMA`; ``errors`` lists ``path: message`` lines."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        return ".".join(["$"] + parts + [missing]) + ": required field missing"
    return ".".join(["$"] + parts) + f": {err.message}"


def validate(data: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        raise ScenarioSchemaError([_field_path(e) for e in errors])


@dataclass(frozen=True)
class DspSettings:
    sample_rate: float = 2e8
    carrier_f: float = 5e6
    noise_oversample_rate: float = 1e6
    out_dt: float = 1e-5
    antialias_corner: float | None = 5e7
    antialias_numtaps: int = 31
    demod_phase: float | tuple = 0.0
    broadband_floor: bool = False
    floor_level: float = 0.01
    fir: FirSpec = FirSpec()

    @classmethod
    def from_dict(cls, data: dict | None) -> "DspSettings":
        data = dict(data or {})
        fir = FirSpec(**data.pop("fir", {}))
        if isinstance(data.get("demod_phase"), list):
            data["demod_phase"] = tuple(data["demod_phase"])
        return cls(fir=fir, **data)

    def to_dict(self) -> dict:
        phase = list(self.demod_phase) if isinstance(self.demod_phase, tuple) else self.demod_phase
        return {
            "sample_rate": self.sample_rate,
            "carrier_f": self.carrier_f,
            "noise_oversample_rate": self.noise_oversample_rate,
            "out_dt": self.out_dt,
            "antialias_corner": self.antialias_corner,
            "antialias_numtaps": self.antialias_numtaps,
            "demod_phase": phase,
            "broadband_floor": self.broadband_floor,
            "floor_level": self.floor_level,
            "fir": self.fir.to_dict(),
        }

    def chain(self) -> DemodChain:
        return DemodChain(
            sample_rate=self.sample_rate,
            f=self.carrier_f,
            phase=self.demod_phase,
            fir=self.fir,
            out_dt=self.out_dt,
            corner=self.antialias_corner,
            antialias_numtaps=self.antialias_numtaps,
        )

    def effective_fraction(self) -> float:
        """Effective independent samples per RF record, ``2 * ENBW * out_dt`` capped at 1."""
        return min(1.0, 2.0 * self.fir.enbw() * self.out_dt)


def rf_records(
    model: ReadoutModel,
    spec: TrajectorySpec,
    duration: float,
    seed: int,
    dsp: DspSettings = DspSettings(),
    stream: str = "rf",
    noise: bool = True,
) -> Records:
    """Synthesise photocurrents and demodulate them to records at ``t = i * out_dt``, ``0 <= i < n``.

    Chunks stream straight from the synthesiser into the demodulator, so
    memory stays bounded for long runs.
    """
    chain = dsp.chain()
    n = n_records(duration, dsp.out_dt)
    margin = chain.half_span + 2 * dsp.out_dt
    chunks = synthesize_rf_chunks(
        model,
        spec,
        duration=n * dsp.out_dt,
        seed=seed,
        noise_oversample_rate=dsp.noise_oversample_rate,
        broadband_floor=dsp.broadband_floor,
        sample_rate=dsp.sample_rate,
        carrier_f=dsp.carrier_f,
        fir=dsp.fir,
        margin=margin,
        noise=noise,
        floor_level=dsp.floor_level,
        stream=stream,
    )
    parts = [chain.process(c) for c in chunks]
    rec = Records.concatenate(parts)
    idx = np.rint(rec.t / dsp.out_dt).astype(np.int64)
    keep = (idx >= 0) & (idx < n)
    out = rec[keep]
    if len(out) != n:
        raise RuntimeError(f"demodulator produced {len(out)} of {n} records")
    return Records(np.arange(n) * dsp.out_dt, out.u, out.v)


def measure(
    model: ReadoutModel,
    spec: TrajectorySpec,
    duration: float,
    seed: int,
    tier: str,
    dsp: DspSettings = DspSettings(),
    stream: str = "main",
) -> Records:
    """Records from either tier on the common ``t = i * out_dt`` grid."""
    if tier == "baseband":
        return simulate_baseband(model, spec, dt=dsp.out_dt, seed=seed, stream=stream, duration=duration)
    if tier == "rf":
        return rf_records(model, spec, duration, seed, dsp, stream=stream)
    raise ValueError(f"unknown tier {tier!r}")


@dataclass
class Scenario:
    bench: BenchConfig
    trajectory: TrajectorySpec
    trajectory_data: dict
    tier: str
    duration: float
    seed: int
    dsp: DspSettings = DspSettings()
    repeats: int = 1
    window: int = 2600
    short_window: int = 260
    endpoint_window: float = 1.5e-4
    calibration: object = "none"
    reference_bench: dict | None = None
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    name: str = ""
    description: str = ""
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "Scenario":
        validate(data)
        analysis = data.get("analysis", {})
        try:
            traj = trajectory_from_dict(copy.deepcopy(data["trajectory"]))
        except TypeError as exc:
            raise ScenarioSchemaError([f"$.trajectory: {exc}"]) from exc
        sc = cls(
            bench=BenchConfig.from_dict(data["bench"]),
            trajectory=traj,
            trajectory_data=copy.deepcopy(data["trajectory"]),
            tier=data["tier"],
            duration=float(data["duration"]),
            seed=int(data["seed"]),
            dsp=DspSettings.from_dict(data.get("dsp")),
            repeats=int(data.get("repeats", 1)),
            window=int(analysis.get("window", 2600)),
            short_window=int(analysis.get("short_window", 260)),
            endpoint_window=float(analysis.get("endpoint_window", 1.5e-4)),
            calibration=copy.deepcopy(data.get("calibration", "none")),
            reference_bench=copy.deepcopy(data.get("reference", {}).get("bench")),
            outputs={**DEFAULT_OUTPUTS, **data.get("outputs", {})},
            name=data.get("name", ""),
            description=data.get("description", ""),
            base_dir=Path(base_dir),
        )
        sc.check()
        return sc

    def check(self) -> None:
        """Cross-field constraints beyond the schema."""
        n = n_records(self.duration, self.dsp.out_dt)
        if n < MIN_ANALYSIS_RECORDS:
            raise ConfigError(
                f"duration / out_dt = {n} records; analysis needs >= {MIN_ANALYSIS_RECORDS}"
            )
        if self.reference_bench is not None:
            self.bench.replace(**self.reference_bench)
        if self.tier == "rf":
            self.dsp.chain()

    def to_dict(self) -> dict:
        data = {
            "schema": SCHEMA_ID,
            "name": self.name,
            "description": self.description,
            "bench": self.bench.to_dict(),
            "trajectory": copy.deepcopy(self.trajectory_data),
            "tier": self.tier,
            "duration": self.duration,
            "seed": self.seed,
            "repeats": self.repeats,
            "dsp": self.dsp.to_dict(),
            "analysis": {
                "window": self.window,
                "short_window": self.short_window,
                "endpoint_window": self.endpoint_window,
            },
            "calibration": copy.deepcopy(self.calibration),
            "outputs": dict(self.outputs),
        }
        if self.reference_bench is not None:
            data["reference"] = {"bench": dict(self.reference_bench)}
        return data

    def replace(self, **changes) -> "Scenario":
        data = self.to_dict()
        data.update(changes)
        return Scenario.from_dict(data, self.base_dir)


def bundled_scenarios() -> list[str]:
    root = resources.files("eprtrack") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(name) -> Path:
    """A filesystem path, or the name of a bundled scenario (with or without ``.json``)."""
    path = Path(name)
    if path.exists():
        return path
    fname = path.name if path.name.endswith(".json") else path.name + ".json"
    if str(path.parent) in ("", ".") and fname in bundled_scenarios():
        return Path(str(resources.files("eprtrack") / "scenarios" / fname))
    raise FileNotFoundError(f"scenario {name!r} not found")


def load_scenario(name, overrides: dict | None = None) -> Scenario:
    """Read, override (``seed``, ``tier``...), validate and build a scenario."""
    path = resolve_scenario_path(name)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioSchemaError([f"$: invalid JSON ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ScenarioSchemaError(["$: scenario must be a JSON object"])
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return Scenario.from_dict(data, base_dir=path.parent)


@dataclass
class RunResult:
    scenario: Scenario
    model: ReadoutModel
    records: Records
    summary: RunSummary
    calibration: CalibrationScale | None


def _effective_n(sc: Scenario, n: int) -> int:
    if sc.tier == "rf":
        return max(2, int(n * sc.dsp.effective_fraction()))
    return n


def _calibration_run(sc: Scenario, duration: float | None = None) -> CalibrationScale:
    vac = sc.bench.replace(entanglement_on=False)
    model = build_bench(vac)
    dur = duration if duration is not None else sc.duration
    rec = measure(model, Zero(dur), dur, sc.seed, sc.tier, sc.dsp, stream="calib")
    return calibrate(rec)


def _resolve_calibration(sc: Scenario) -> CalibrationScale | None:
    cal = sc.calibration
    if cal == "none":
        return None
    if cal["mode"] == "auto":
        return _calibration_run(sc, cal.get("duration"))
    path = Path(cal["path"])
    if not path.is_absolute():
        path = sc.base_dir / path
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return CalibrationScale.from_dict(data.get("calibration", data))


def _repeat_records(sc: Scenario, model: ReadoutModel, role: str, cal) -> list[Records]:
    out = []
    for k in range(sc.repeats):
        rec = measure(model, sc.trajectory, sc.duration, sc.seed, sc.tier, sc.dsp, stream=f"{role}{k}")
        out.append(cal.apply(rec) if cal is not None else rec)
    return out


def _endpoints(sc: Scenario, runs: list[Records], model: ReadoutModel) -> dict:
    """Start and end of the inferred trajectory, averaged over the edge records of every repeat."""
    result = {}
    w = sc.endpoint_window
    for label, (t0, t1), t_true in (
        ("start", (0.0, w), 0.0),
        ("end", (sc.duration - w, sc.duration), min(sc.duration, sc.trajectory.duration)),
    ):
        per = []
        for rec in runs:
            sel = rec.between(t0 - 1e-12, t1 + 1e-12)
            xi, yi = model.infer(sel.u, sel.v)
            per.append((float(np.mean(xi)), float(np.mean(yi)), len(sel)))
        arr = np.array([p[:2] for p in per])
        est = arr.mean(axis=0)
        if len(per) > 1:
            se = arr.std(axis=0, ddof=1) / math.sqrt(len(per))
        else:
            cov = model.inferred_covariance()
            n_eff = max(1, _effective_n(sc, per[0][2]))
            se = np.sqrt(np.diag(cov) / n_eff)
        tx, ty = evaluate(sc.trajectory, np.array([t_true]))
        result[label] = {
            "estimate": est.tolist(),
            "standard_error": se.tolist(),
            "trajectory": [float(tx[0]), float(ty[0])],
        }
    return result


def _analyse(sc: Scenario, model: ReadoutModel, runs: list[Records]) -> tuple[Records, RunSummary]:
    records = Records.concatenate(runs)
    n = len(records)
    spec = None if isinstance(sc.trajectory, Zero) else sc.trajectory
    summary = summarize(records, model, spec, window=min(sc.window, n))
    n_eff = _effective_n(sc, n)
    if n_eff != n:
        summary.variance_band_3sigma = chi2_band(n_eff)
        summary.product_rel_se = product_rel_se(n_eff)
    pred = predicted_uncertainty_product(model)
    summary.predicted_product = pred
    summary.classification = bound_check(summary, pred, effective_samples=n_eff)
    err = trajectory_error(records, sc.trajectory, model)
    summary.trajectory_rms = (err.rms_x, err.rms_y)
    short = min(sc.short_window, n)
    mean_u = mean_v = None
    if spec is not None:
        tx, ty = evaluate(spec, records.t)
        mean_u = model.gain[0, 0] * tx + model.gain[0, 1] * ty
        mean_v = model.gain[1, 0] * tx + model.gain[1, 1] * ty
    su = windowed_variance(records.u, short, mean_u)
    sv = windowed_variance(records.v, short, mean_v)
    summary.extra.update(
        {
            "short_window": short,
            "short_window_variances": np.column_stack([su.per_window, sv.per_window]).tolist(),
            "effective_records": n_eff,
            "repeats": sc.repeats,
            "tier": sc.tier,
            "readout_model": model.to_dict(),
            "endpoints": _endpoints(sc, runs, model),
        }
    )
    return records, summary


def run_scenario(sc: Scenario) -> RunResult:
    """Calibrate (if requested), measure every repeat, run the reference, summarise."""
    model = build_bench(sc.bench)
    cal = _resolve_calibration(sc)
    runs = _repeat_records(sc, model, "main", cal)
    records, summary = _analyse(sc, model, runs)
    if sc.reference_bench is not None:
        ref_model = build_bench(sc.bench.replace(**sc.reference_bench))
        ref_runs = _repeat_records(sc, ref_model, "ref", cal)
        ref_records = Records.concatenate(ref_runs)
        ref_err = trajectory_error(ref_records, sc.trajectory, ref_model)
        rms = summary.trajectory_rms
        summary.extra["reference"] = {
            "bench": dict(sc.reference_bench),
            "trajectory_rms": [ref_err.rms_x, ref_err.rms_y],
            "rms_ratio": [ref_err.rms_x / rms[0], ref_err.rms_y / rms[1]],
            "predicted_product": predicted_uncertainty_product(ref_model),
        }
    return RunResult(sc, model, records, summary, cal)


def calibrate_scenario(sc: Scenario) -> CalibrationScale:
    """Entanglement-off, zero-displacement variant of ``sc`` reduced to a calibration."""
    dur = sc.calibration.get("duration") if isinstance(sc.calibration, dict) else None
    return _calibration_run(sc, dur)


SWEEP_PARAMETERS = {
    "loss": ("detector_efficiency",),
    "squeezing_db": ("squeezer1_db", "squeezer2_db"),
    "visibility": ("bs1_visibility", "bs3_visibility"),
}


def _sweep_point(args) -> dict:
    sc, parameter, value = args
    bench = sc.bench.replace(**{f: value for f in SWEEP_PARAMETERS[parameter]})
    point = Scenario(**{**sc.__dict__, "bench": bench})
    result = run_scenario(point)
    s = result.summary
    return {
        "value": value,
        "product": s.product_inferred,
        "factor": s.violation_factor_eq2,
        "var_u": s.var_u,
        "var_v": s.var_v,
        "db_u": s.squeezing_db[0],
        "db_v": s.squeezing_db[1],
        "predicted": s.predicted_product,
    }


def sweep(sc: Scenario, parameter: str, grid, jobs: int = 1) -> list[dict]:
    """One run per grid value, all with the scenario's seed; rows come back in grid order."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"sweep parameter must be one of {sorted(SWEEP_PARAMETERS)}")
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty sweep grid")
    for value in grid:
        sc.bench.replace(**{f: value for f in SWEEP_PARAMETERS[parameter]})
    tasks = [(sc, parameter, g) for g in grid]
    if jobs > 1 and len(grid) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]
