"""Measurement records, synthesised two independent ways.

``simulate_baseband`` draws each ``(u, v)`` pair directly from the readout
model. ``synthesize_rf`` builds the two photocurrents at the full sampling
rate, for the DSP chain to demodulate.

RF noise contract: each BHD photocurrent is ``a(t) cos(2 pi f t) + b(t)
sin(2 pi f t)``. ``a`` and ``b`` are independent band-limited baseband
processes with the readout covariance across the two detectors, and a flat
one-sided PSD of ``noise_cov / ENBW``, where ENBW is the equivalent noise
bandwidth of the demodulator's lowpass. Demodulating at phase 0 with the same
lowpass therefore returns the signal mean plus noise of covariance
``noise_cov``, already in vacuum units.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np
from scipy import signal

from .bench import ReadoutModel
from .dsp import FirSpec, carrier
from .records import Records, RfTrace
from .seeding import NormalStream
from .trajectory import TrajectorySpec, Zero, evaluate

__all__ = ["n_records", "simulate_baseband", "synthesize_rf", "synthesize_rf_chunks"]

_INTERP_HALF = 4
_INTERP_PAD = _INTERP_HALF + 4


def _interpolator(up: int) -> np.ndarray:
    # band-limited upsampler, 2 * _INTERP_HALF input samples per output
    # resample_poly applies the gain of up itself
    return signal.firwin(2 * _INTERP_HALF * up + 1, 1.0 / up, window=("kaiser", 6.0))


def n_records(duration: float, dt: float) -> int:
    """Number of records on the grid ``t_i = i * dt`` covering ``[0, duration)``."""
    return int(round(duration / dt))


def _means(model: ReadoutModel, spec: TrajectorySpec, t: np.ndarray):
    if isinstance(spec, Zero):
        z = np.zeros_like(t)
        return z, z
    tx, ty = evaluate(spec, t)
    g = model.gain
    return g[0, 0] * tx + g[0, 1] * ty, g[1, 0] * tx + g[1, 1] * ty


def simulate_baseband(
    model: ReadoutModel,
    spec: TrajectorySpec,
    dt: float = 1e-5,
    seed: int = 0,
    noise: bool = True,
    stream: str = "baseband",
    duration: float | None = None,
) -> Records:
    """One bivariate Gaussian draw per record time ``i * dt``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    n = n_records(spec.duration if duration is None else duration, dt)
    t = np.arange(n) * dt
    mu, mv = _means(model, spec, t)
    if noise:
        chol = np.linalg.cholesky(model.noise_cov)
        nz = chol @ NormalStream(seed, stream, 2).take(0, n)
        mu, mv = mu + nz[0], mv + nz[1]
    return Records(t, mu, mv)


def _check_rates(sample_rate, carrier_f, noise_rate, fir):
    up = sample_rate / noise_rate
    if abs(up - round(up)) > 1e-9 or round(up) < 1:
        raise ValueError("sample_rate must be an integer multiple of noise_oversample_rate")
    if not carrier_f + noise_rate / 2 < sample_rate / 2:
        raise ValueError("noise band above the carrier exceeds Nyquist")
    if not noise_rate / 2 < carrier_f:
        raise ValueError("noise band below the carrier crosses DC")
    if not noise_rate / 2 > fir.cutoff + fir.transition_width:
        raise ValueError("noise_oversample_rate too low to cover the analysis band")
    return int(round(up))


def synthesize_rf_chunks(
    model: ReadoutModel,
    spec: TrajectorySpec,
    duration: float | None = None,
    seed: int = 0,
    noise_oversample_rate: float = 1e6,
    broadband_floor: bool = False,
    *,
    sample_rate: float = 2e8,
    carrier_f: float = 5e6,
    fir: FirSpec = FirSpec(),
    margin: float = 5e-4,
    noise: bool = True,
    floor_level: float = 0.01,
    stream: str = "rf",
    block: int = 4096,
) -> Iterator[RfTrace]:
    """Generate the photocurrents over ``[-margin, duration + margin)`` in contiguous chunks.

    The trajectory holds its end values inside the margins, which give the
    demodulator's filters full support at ``t = 0`` and ``t = duration``.
    ``broadband_floor`` adds white noise at the full rate whose in-band
    contribution after demodulation is ``floor_level`` (vacuum units).
    """
    if duration is None:
        duration = spec.duration
    if not duration > 0:
        raise ValueError("duration must be > 0")
    up = _check_rates(sample_rate, carrier_f, noise_rate=noise_oversample_rate, fir=fir)
    enbw = fir.enbw()
    k_first = -math.ceil(margin * noise_oversample_rate)
    k_stop = math.ceil((duration + margin) * noise_oversample_rate)

    interp = _interpolator(up)
    chol = np.linalg.cholesky(model.noise_cov)
    sigma = math.sqrt(0.5 * noise_oversample_rate / enbw)
    quad_a = NormalStream(seed, f"{stream}.a", 2)
    quad_b = NormalStream(seed, f"{stream}.b", 2)
    floor = NormalStream(seed, f"{stream}.floor", 2)
    floor_sigma = math.sqrt(floor_level * sample_rate / (4.0 * enbw))

    for k0 in range(k_first, k_stop, block):
        k1 = min(k0 + block, k_stop)
        n0, n1 = k0 * up, k1 * up
        t = np.arange(n0, n1, dtype=np.int64) / sample_rate
        cos_c = carrier(n0, n1 - n0, sample_rate, carrier_f)
        sin_c = carrier(n0, n1 - n0, sample_rate, carrier_f, -np.pi / 2)
        mu, mv = _means(model, spec, t)
        a1, a2 = mu, mv
        b1 = b2 = 0.0
        if noise:
            lo, hi = k0 - _INTERP_PAD, k1 + _INTERP_PAD
            za = sigma * (chol @ quad_a.take(lo, hi))
            zb = sigma * (chol @ quad_b.take(lo, hi))
            crop = slice(_INTERP_PAD * up, (_INTERP_PAD + k1 - k0) * up)
            za = signal.resample_poly(za, up, 1, axis=1, window=interp)[:, crop]
            zb = signal.resample_poly(zb, up, 1, axis=1, window=interp)[:, crop]
            a1, a2 = mu + za[0], mv + za[1]
            b1, b2 = zb[0], zb[1]
        i1 = a1 * cos_c + b1 * sin_c
        i2 = a2 * cos_c + b2 * sin_c
        if noise and broadband_floor:
            w = floor_sigma * floor.take(n0, n1)
            i1 = i1 + w[0]
            i2 = i2 + w[1]
        yield RfTrace(sample_rate, i1, i2, carrier_f, n0)


def synthesize_rf(
    model: ReadoutModel,
    spec: TrajectorySpec,
    duration: float | None = None,
    seed: int = 0,
    noise_oversample_rate: float = 1e6,
    broadband_floor: bool = False,
    **kw,
) -> RfTrace:
    """Whole-trace version of :func:`synthesize_rf_chunks`."""
    return RfTrace.concatenate(
        synthesize_rf_chunks(model, spec, duration, seed, noise_oversample_rate, broadband_floor, **kw)
    )
