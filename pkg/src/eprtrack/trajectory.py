"""Time-dependent phase-space displacements ``alpha(t) = <X>(t) + i <Y>(t)``.

Amplitudes are in vacuum-normalised quadrature units, times in seconds and
phase rates in rad/s. Every spec evaluates vectorised over ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "Arc",
    "Constant",
    "Spiral",
    "TrajectorySpec",
    "Waypoints",
    "Zero",
    "evaluate",
    "fig4_bottom_preset",
    "fig4_top_preset",
    "sample_trajectory",
    "trajectory_from_dict",
]

SQRT2 = math.sqrt(2.0)
FIG4_TOP_START = (-3.7 * SQRT2, 5.8 * SQRT2)
FIG4_TOP_END = (-5.3 * SQRT2, -4.3 * SQRT2)


class TrajectorySpec:
    """Base class; subclasses implement :meth:`_xy` on an array of times."""

    kind = ""
    duration: float

    def _check_duration(self):
        if not self.duration > 0:
            raise ValueError("trajectory duration must be > 0")

    def _xy(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def scaled(self, factor: float) -> "TrajectorySpec":
        """Same time profile with every displacement multiplied by ``factor``."""
        return _Scaled(self, float(factor))


@dataclass(frozen=True)
class Zero(TrajectorySpec):
    duration: float
    kind = "zero"

    def __post_init__(self):
        self._check_duration()

    def _xy(self, t):
        return np.zeros_like(t), np.zeros_like(t)

    def to_dict(self):
        return {"kind": self.kind, "duration": self.duration}


@dataclass(frozen=True)
class Constant(TrajectorySpec):
    x: float
    y: float
    duration: float
    kind = "constant"

    def __post_init__(self):
        self._check_duration()

    def _xy(self, t):
        return np.full_like(t, self.x), np.full_like(t, self.y)

    def to_dict(self):
        return {"kind": self.kind, "x": self.x, "y": self.y, "duration": self.duration}


def _rate_table(phase_rate) -> tuple[np.ndarray, np.ndarray]:
    if np.ndim(phase_rate) == 0:
        return np.array([0.0]), np.array([float(phase_rate)])
    table = np.asarray(phase_rate, dtype=float).reshape(-1, 2)
    starts, rates = table[:, 0], table[:, 1]
    if starts[0] != 0.0 or np.any(np.diff(starts) <= 0):
        raise ValueError("phase-rate segments must start at t=0 and be strictly increasing")
    return starts, rates


@dataclass(frozen=True)
class Arc(TrajectorySpec):
    """Constant radius, phase ``phase_start + integral of phase_rate``.

    ``phase_rate`` is either a constant or a sequence of ``(t_start, rate)``
    segments with piecewise-constant rate.
    """

    radius: float
    phase_start: float
    phase_rate: float | tuple
    duration: float
    kind = "arc"

    def __post_init__(self):
        self._check_duration()
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if np.ndim(self.phase_rate):
            object.__setattr__(
                self, "phase_rate", tuple(tuple(map(float, seg)) for seg in self.phase_rate)
            )
        _rate_table(self.phase_rate)

    def phase(self, t) -> np.ndarray:
        starts, rates = _rate_table(self.phase_rate)
        t = np.asarray(t, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(rates[:-1] * np.diff(starts))])
        idx = np.searchsorted(starts, t, side="right") - 1
        return self.phase_start + cum[idx] + rates[idx] * (t - starts[idx])

    def _xy(self, t):
        ph = self.phase(t)
        return self.radius * np.cos(ph), self.radius * np.sin(ph)

    def to_dict(self):
        rate = self.phase_rate if np.ndim(self.phase_rate) == 0 else [list(s) for s in self.phase_rate]
        return {
            "kind": self.kind,
            "radius": self.radius,
            "phase_start": self.phase_start,
            "phase_rate": rate,
            "duration": self.duration,
        }


@dataclass(frozen=True)
class Spiral(TrajectorySpec):
    """Radius ramped linearly from ``radius_start`` to ``radius_end``, phase linear in time."""

    radius_start: float
    radius_end: float
    phase_start: float
    phase_rate: float
    duration: float
    kind = "spiral"

    def __post_init__(self):
        self._check_duration()
        if self.radius_start < 0 or self.radius_end < 0:
            raise ValueError("radius must be >= 0")

    def radius(self, t) -> np.ndarray:
        s = np.asarray(t, dtype=float) / self.duration
        return self.radius_start + (self.radius_end - self.radius_start) * s

    def _xy(self, t):
        ph = self.phase_start + self.phase_rate * t
        rad = self.radius(t)
        return rad * np.cos(ph), rad * np.sin(ph)

    def to_dict(self):
        return {
            "kind": self.kind,
            "radius_start": self.radius_start,
            "radius_end": self.radius_end,
            "phase_start": self.phase_start,
            "phase_rate": self.phase_rate,
            "duration": self.duration,
        }


@dataclass(frozen=True)
class Waypoints(TrajectorySpec):
    """Interpolates ``(t, x, y)`` points; the first must sit at ``t = 0``.

    The duration is the time of the last waypoint.
    """

    points: tuple
    interpolation: str = "linear"
    duration: float = field(init=False)
    kind = "waypoints"

    def __post_init__(self):
        pts = tuple(tuple(map(float, p)) for p in self.points)
        arr = np.asarray(pts).reshape(-1, 3)
        if len(arr) < 2:
            raise ValueError("need at least two waypoints")
        if arr[0, 0] != 0.0 or np.any(np.diff(arr[:, 0]) <= 0):
            raise ValueError("waypoint times must start at 0 and be strictly increasing")
        if self.interpolation not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "duration", float(arr[-1, 0]))
        self._check_duration()

    def _xy(self, t):
        arr = np.asarray(self.points)
        if self.interpolation == "linear":
            return np.interp(t, arr[:, 0], arr[:, 1]), np.interp(t, arr[:, 0], arr[:, 2])
        spline = CubicSpline(arr[:, 0], arr[:, 1:], axis=0)
        xy = spline(t)
        return xy[..., 0], xy[..., 1]

    def to_dict(self):
        return {
            "kind": self.kind,
            "points": [list(p) for p in self.points],
            "interpolation": self.interpolation,
        }


@dataclass(frozen=True)
class _Scaled(TrajectorySpec):
    base: TrajectorySpec
    factor: float

    @property
    def duration(self):
        return self.base.duration

    @property
    def kind(self):
        return self.base.kind

    def _xy(self, t):
        x, y = self.base._xy(t)
        return self.factor * x, self.factor * y

    def to_dict(self):
        return {"kind": "scaled", "factor": self.factor, "base": self.base.to_dict()}


def evaluate(spec: TrajectorySpec, t, clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised evaluation. With ``clamp`` the trajectory holds its end values outside ``[0, duration]``."""
    t = np.asarray(t, dtype=float)
    if clamp:
        t = np.clip(t, 0.0, spec.duration)
    elif np.any((t < 0) | (t > spec.duration)):
        raise ValueError("time outside [0, duration]")
    return spec._xy(t)


def sample_trajectory(spec: TrajectorySpec, t: float) -> tuple[float, float]:
    """Displacement ``(<X>, <Y>)`` at a single time ``0 <= t <= duration``."""
    if not 0.0 <= t <= spec.duration:
        raise ValueError(f"t={t} outside [0, {spec.duration}]")
    x, y = spec._xy(np.asarray(float(t)))
    return float(x), float(y)


def fig4_top_preset(
    duration: float = 5e-3,
    dwell: float = 2.5e-4,
    sweep_turns: float = 0.9,
    start: tuple[float, float] = FIG4_TOP_START,
    end: tuple[float, float] = FIG4_TOP_END,
) -> Arc:
    """Constant-depth arc: hold, sweep ``sweep_turns`` counter-clockwise, reverse, stop, hold.

    The radius is that of ``start``; the stop point has the direction of
    ``end``. ``dwell`` is the hold time at each end.
    """
    active = duration - 2 * dwell
    if active <= 0 or dwell < 0:
        raise ValueError("dwell must be >= 0 and leave time for the sweep")
    radius = math.hypot(*start)
    p0 = math.atan2(start[1], start[0])
    p_turn = p0 + 2 * math.pi * sweep_turns
    p_end = math.atan2(end[1], end[0])
    p_end += 2 * math.pi * math.floor((p_turn - p_end) / (2 * math.pi))
    forward = p_turn - p0
    back = p_turn - p_end
    omega = (forward + back) / active
    t_turn = dwell + forward / omega
    segments = [(0.0, 0.0), (dwell, omega), (t_turn, -omega), (duration - dwell, 0.0)]
    if dwell == 0:
        segments = segments[1:-1]
    return Arc(radius=radius, phase_start=p0, phase_rate=tuple(segments), duration=duration)


def fig4_bottom_preset(
    duration: float = 5e-3,
    radius_start: float = 6.0 * SQRT2,
    radius_end: float = 1.5 * SQRT2,
    turns: float = 1.25,
    phase_start: float = math.pi / 4,
) -> Spiral:
    """Spiral with linearly decreasing modulation depth."""
    if radius_end >= radius_start:
        raise ValueError("radius must decrease")
    return Spiral(
        radius_start=radius_start,
        radius_end=radius_end,
        phase_start=phase_start,
        phase_rate=2 * math.pi * turns / duration,
        duration=duration,
    )


_PRESETS = {"fig4_top": fig4_top_preset, "fig4_bottom": fig4_bottom_preset}


def trajectory_from_dict(data: dict) -> TrajectorySpec:
    kind = data.get("kind")
    params = {k: v for k, v in data.items() if k != "kind"}
    if kind == "zero":
        return Zero(**params)
    if kind == "constant":
        return Constant(**params)
    if kind == "arc":
        return Arc(**params)
    if kind == "spiral":
        return Spiral(**params)
    if kind == "waypoints":
        return Waypoints(**params)
    if kind == "scaled":
        return trajectory_from_dict(params["base"]).scaled(params["factor"])
    if kind == "preset":
        name = params.pop("name")
        if name not in _PRESETS:
            raise ValueError(f"unknown preset {name!r}")
        return _PRESETS[name](**params)
    raise ValueError(f"unknown trajectory kind {kind!r}")
