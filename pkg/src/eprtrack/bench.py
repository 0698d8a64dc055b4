"""The two-detector measurement bench, compiled to a linear readout model.

Optical chain (mode 0 is the signal arm, mode 1 the entangled reference)::

    squeezer 1 (Y-squeezed) --+
                              BS1 --> arm A --> BS2 (displacement) --+
    squeezer 2 (X-squeezed) --+   \\-> arm B ------------------------ BS3 --> BHD1, BHD2

BHD1 sees ``(X_A - X_B)/sqrt(2)`` and BHD2 sees ``(Y_A + Y_B)/sqrt(2)``.
Imperfect interference visibility ``v`` is modelled as a loss ``v**2`` on both
beams entering that splitter.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from . import gaussian as gc

__all__ = [
    "BenchConfig",
    "ConfigError",
    "ReadoutModel",
    "build_bench",
    "detector_state",
    "predicted_uncertainty_product",
    "visibility_to_efficiency",
]


class ConfigError(ValueError):
    """A bench configuration outside its physical range."""


def visibility_to_efficiency(v: float) -> float:
    """Mode-overlap efficiency ``v**2`` for interference visibility ``v``."""
    if not 0.0 < v <= 1.0:
        raise ConfigError(f"visibility must lie in (0, 1], got {v}")
    return v * v


@dataclass(frozen=True)
class BenchConfig:
    squeezer1_db: float = 10.0
    squeezer2_db: float = 10.0
    bs1_visibility: float = 1.0
    bs3_visibility: float = 1.0
    arm_loss_a: float = 1.0
    arm_loss_b: float = 1.0
    detector_efficiency: float = 0.99
    bs2_reflectivity: float = 0.9999
    lo_phase_1: float = 0.0
    lo_phase_2: float = np.pi / 2
    entanglement_on: bool = True

    def __post_init__(self):
        for name in ("squeezer1_db", "squeezer2_db"):
            if not getattr(self, name) >= 0.0:
                raise ConfigError(f"{name} must be >= 0 dB")
        for name in ("bs1_visibility", "bs3_visibility", "bs2_reflectivity"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1]")
        for name in ("arm_loss_a", "arm_loss_b", "detector_efficiency"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name != "entanglement_on" and not np.isfinite(value):
                raise ConfigError(f"{f.name} must be finite")

    @classmethod
    def ideal(cls, squeezing_db: float = 10.0, entanglement_on: bool = True) -> "BenchConfig":
        """Lossless bench with perfect visibilities and a perfect BS2."""
        return cls(
            squeezer1_db=squeezing_db,
            squeezer2_db=squeezing_db,
            detector_efficiency=1.0,
            bs2_reflectivity=1.0,
            entanglement_on=entanglement_on,
        )

    def replace(self, **changes) -> "BenchConfig":
        return BenchConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown bench fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    """Linear map from displacement ``(<X>, <Y>)`` to the two BHD means, plus noise.

    ``gain[k, l]`` is the mean of detector ``k`` per unit displacement along
    quadrature ``l``; ``noise_cov`` is the 2x2 readout covariance in
    vacuum units.
    """

    gain: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        gain = np.array(self.gain, dtype=float).reshape(2, 2)
        noise = np.array(self.noise_cov, dtype=float).reshape(2, 2)
        if not np.allclose(noise, noise.T, atol=1e-12, rtol=1e-10):
            raise ConfigError("noise covariance is not symmetric")
        noise = 0.5 * (noise + noise.T)
        if np.min(np.linalg.eigvalsh(noise)) <= 0.0:
            raise ConfigError("noise covariance is not positive definite")
        gain.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "noise_cov", noise)

    def inferred_covariance(self) -> np.ndarray:
        """Covariance of ``gain^-1 (u, v)``, the inferred ``(X, Y)`` estimate."""
        ginv = self.gain_inverse()
        return ginv @ self.noise_cov @ ginv.T

    def gain_inverse(self) -> np.ndarray:
        if abs(np.linalg.det(self.gain)) < 1e-12:
            raise ConfigError("readout gain is singular")
        return np.linalg.inv(self.gain)

    def infer(self, u, v) -> tuple[np.ndarray, np.ndarray]:
        """Map detector readings back to displacement estimates."""
        xy = self.gain_inverse() @ np.vstack([np.asarray(u, float), np.asarray(v, float)])
        return xy[0], xy[1]

    def to_dict(self) -> dict:
        return {"gain": self.gain.tolist(), "noise_cov": self.noise_cov.tolist()}


def _propagate(config: BenchConfig, dx: float = 0.0, dy: float = 0.0) -> gc.QuadratureState:
    if config.entanglement_on:
        r1 = gc.db_to_r(config.squeezer1_db)
        r2 = gc.db_to_r(config.squeezer2_db)
    else:
        r1 = r2 = 0.0
    st = gc.vacuum(2)
    st = gc.squeeze(st, 0, r1, np.pi / 2)
    st = gc.squeeze(st, 1, r2, 0.0)
    eta1 = visibility_to_efficiency(config.bs1_visibility)
    st = gc.loss(gc.loss(st, 0, eta1), 1, eta1)
    st = gc.beamsplitter(st, 0, 1, 0.5)
    st = gc.loss(st, 0, config.arm_loss_a)
    st = gc.loss(st, 1, config.arm_loss_b)
    # BS2: the entangled arm is transmitted with loss 1 - R; the modulated
    # beam's own noise through the 1 - R port is neglected.
    st = gc.loss(st, 0, config.bs2_reflectivity)
    st = gc.displace(st, 0, dx, dy)
    eta3 = visibility_to_efficiency(config.bs3_visibility)
    st = gc.loss(gc.loss(st, 0, eta3), 1, eta3)
    st = gc.beamsplitter(st, 0, 1, 0.5)
    st = gc.loss(st, 0, config.detector_efficiency)
    st = gc.loss(st, 1, config.detector_efficiency)
    return st


def detector_state(config: BenchConfig, dx: float = 0.0, dy: float = 0.0) -> gc.QuadratureState:
    """Two-mode state arriving at BHD1 (mode 0) and BHD2 (mode 1)."""
    return _propagate(config, dx, dy)


def build_bench(config: BenchConfig) -> ReadoutModel:
    """Compile ``config`` into a :class:`ReadoutModel` via the symplectic chain."""
    thetas = (config.lo_phase_1, config.lo_phase_2)
    c = np.zeros((2, 4))
    for k, th in enumerate(thetas):
        c[k, 2 * k:2 * k + 2] = np.cos(th), np.sin(th)

    base = _propagate(config)
    noise = c @ base.cov @ c.T
    gain = np.empty((2, 2))
    for col, (dx, dy) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        gain[:, col] = c @ _propagate(config, dx, dy).mean
    return ReadoutModel(gain=gain, noise_cov=noise)


def predicted_uncertainty_product(model: ReadoutModel) -> float:
    """Product of the inferred X and Y standard deviations."""
    cov = model.inferred_covariance()
    return float(np.sqrt(cov[0, 0] * cov[1, 1]))
