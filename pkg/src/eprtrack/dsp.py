"""Photocurrent post-processing: anti-alias filter, demodulation, FIR lowpass, decimation.

Per channel the chain is::

    anti-alias FIR (full rate) -> x 2cos(2 pi f t + phase)
        -> decimating lowpass to ``fir.rate``            (stage 1)
        -> FirSpec lowpass, decimated to ``out_dt``      (stage 2)

Every filter is linear-phase with odd length and is evaluated centred on the
output sample, so group delay is compensated exactly and records land on the
``t = m * out_dt`` grid. Only outputs whose full filter support lies inside the
input are emitted.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .analysis import sample_variance
from .records import Records, RfTrace

__all__ = [
    "CalibrationScale",
    "DecimatingFir",
    "DemodChain",
    "FirSpec",
    "antialias",
    "antialias_taps",
    "calibrate",
    "carrier",
    "demodulate",
    "export_taps_csv",
    "fir_response",
]

# transition width ~ factor * rate / taps for windowed-sinc designs
_WINDOW_FACTOR = {"hamming": 3.3, "hann": 3.1, "blackman": 5.5}
MIN_CALIBRATION_RECORDS = 2600


@dataclass(frozen=True)
class FirSpec:
    """Windowed-sinc lowpass running at ``rate`` Hz.

    ``cutoff`` is the half-amplitude (-6 dB) point; ``transition_width`` is the
    full passband-to-stopband width and sets the tap count.
    """

    cutoff: float = 1e4
    transition_width: float = 5e3
    rate: float = 1e6
    window: str = "hamming"

    def __post_init__(self):
        if not self.cutoff > 0 or not self.transition_width > 0:
            raise ValueError("cutoff and transition width must be > 0")
        if self.window not in _WINDOW_FACTOR:
            raise ValueError(f"window must be one of {sorted(_WINDOW_FACTOR)}")
        if not self.cutoff + self.transition_width / 2 < self.rate / 2:
            raise ValueError("stopband edge must lie below rate/2")

    @property
    def taps(self) -> int:
        n = math.ceil(_WINDOW_FACTOR[self.window] * self.rate / self.transition_width)
        return n | 1

    def coefficients(self) -> np.ndarray:
        return _firwin(self.taps, self.cutoff, self.rate, self.window)

    def enbw(self) -> float:
        """One-sided equivalent noise bandwidth in Hz (unity DC gain)."""
        h = self.coefficients()
        return 0.5 * self.rate * float(np.sum(h * h))

    def to_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "transition_width": self.transition_width,
            "rate": self.rate,
            "window": self.window,
        }


_TAPS_CACHE: dict = {}


def _firwin(numtaps: int, cutoff: float, fs: float, window: str) -> np.ndarray:
    key = (numtaps, cutoff, fs, window)
    if key not in _TAPS_CACHE:
        h = signal.firwin(numtaps, cutoff, window=window, fs=fs)
        h.setflags(write=False)
        _TAPS_CACHE[key] = h
    return _TAPS_CACHE[key]


def fir_response(fir: FirSpec, freq) -> np.ndarray | float:
    """Magnitude response of the designed taps in dB at ``freq`` (Hz)."""
    h = fir.coefficients()
    f = np.atleast_1d(np.asarray(freq, dtype=float))
    if np.any(f < 0):
        raise ValueError("frequency must be >= 0")
    _, resp = signal.freqz(h, worN=f, fs=fir.rate)
    db = 20 * np.log10(np.maximum(np.abs(resp), 1e-300))
    return float(db[0]) if np.ndim(freq) == 0 else db


def export_taps_csv(fir: FirSpec, path) -> None:
    h = fir.coefficients()
    np.savetxt(path, np.column_stack([np.arange(h.size), h]), delimiter=",",
               header="index,tap", comments="", fmt=["%d", "%.17g"])


def antialias_taps(sample_rate: float, corner: float = 5e7, numtaps: int = 31) -> np.ndarray:
    # Blackman: passband flat to ~1e-5 dB at the carrier, deep stopband
    if not 0 < corner < sample_rate / 2:
        raise ValueError("anti-alias corner must lie in (0, sample_rate/2)")
    return _firwin(numtaps | 1, corner, sample_rate, "blackman")


def _stage1_taps(sample_rate: float, rate: float) -> np.ndarray:
    # passes the analysis band flat; stopband from rate/2 keeps aliases out of it
    cutoff, width = 0.25 * rate, 0.5 * rate
    n = math.ceil(_WINDOW_FACTOR["hamming"] * sample_rate / width) | 1
    return _firwin(n, cutoff, sample_rate, "hamming")


class DecimatingFir:
    """Streaming odd-length FIR, decimated by ``factor`` and centred.

    Output ``m`` is ``sum_k taps[k] * x[m*factor + half - k]`` with
    ``half = (len(taps) - 1) // 2``, indices being absolute input indices.
    Feed contiguous blocks through :meth:`process`; one instance serves one
    stream.
    """

    def __init__(self, taps, factor: int = 1):
        self.taps = np.asarray(taps, dtype=float)
        if self.taps.size % 2 == 0:
            raise ValueError("FIR length must be odd")
        self.factor = int(factor)
        if self.factor < 1 or self.factor > self.taps.size:
            raise ValueError("decimation factor must lie in [1, len(taps)]")
        self.half = (self.taps.size - 1) // 2
        n_phase = -(-self.taps.size // self.factor)
        g = np.zeros(n_phase * self.factor)
        g[:self.taps.size] = self.taps[::-1]
        self._g = g.reshape(n_phase, self.factor)
        self._buf = np.empty(0)
        self._buf_start: int | None = None
        self._next = 0

    def process(self, x, start: int | None = None) -> tuple[int, np.ndarray]:
        """Consume a block; return ``(first_output_index, outputs)``."""
        x = np.asarray(x, dtype=float)
        D, h = self.factor, self.half
        if self._buf_start is None:
            if start is None:
                start = 0
            self._buf_start = int(start)
            self._next = -((-(self._buf_start + h)) // D)
        elif start is not None and start != self._buf_start + self._buf.size:
            raise ValueError("input blocks must be contiguous")
        buf = np.concatenate([self._buf, x]) if self._buf.size else x
        end = self._buf_start + buf.size
        m0 = self._next
        m_last = (end - 1 - h) // D
        n_out = m_last - m0 + 1
        if n_out <= 0:
            self._buf = buf.copy()
            return m0, np.empty(0)
        s0 = m0 * D - h - self._buf_start
        if D == 1:
            y = np.convolve(buf[s0:s0 + n_out + 2 * h], self.taps, mode="valid")
        else:
            n_phase = self._g.shape[0]
            need = (n_out + n_phase - 1) * D
            seg = buf[s0:s0 + need]
            if seg.size < need:
                seg = np.concatenate([seg, np.zeros(need - seg.size)])
            z = seg.reshape(-1, D) @ self._g.T
            y = z[:n_out, 0].copy()
            for p in range(1, n_phase):
                y += z[p:p + n_out, p]
        self._next = m_last + 1
        keep = self._next * D - h - self._buf_start
        self._buf = buf[keep:].copy()
        self._buf_start += keep
        return m0, y


@functools.lru_cache(maxsize=16)
def _tiled_carrier(offset: int, n: int, p: int, q: int, phase: float) -> np.ndarray:
    k = (offset + np.arange(q, dtype=np.int64)) * p % q
    out = np.resize(np.cos(2 * np.pi * k / q + phase), n)
    out.setflags(write=False)
    return out


def carrier(start: int, n: int, sample_rate: float, f: float, phase: float = 0.0) -> np.ndarray:
    """``cos(2 pi f k / sample_rate + phase)`` for absolute indices ``k = start .. start+n-1``.

    When ``f / sample_rate`` is a ratio ``p/q`` with small ``q`` one period is
    computed and tiled.
    """
    ratio = Fraction(f / sample_rate).limit_denominator(4096)
    if float(ratio) == f / sample_rate:
        p, q = ratio.numerator, ratio.denominator
        return _tiled_carrier(start % q, n, p, q, float(phase))
    idx = start + np.arange(n, dtype=np.int64)
    cycles = np.mod(idx * (f / sample_rate), 1.0)
    return np.cos(2 * np.pi * cycles + phase)


class DemodChain:
    """Streaming demodulator for both BHD channels.

    ``phase`` may be a scalar or a per-channel pair. With ``corner`` set the
    anti-alias filter runs first.
    """

    def __init__(
        self,
        sample_rate: float = 2e8,
        f: float = 5e6,
        phase=0.0,
        fir: FirSpec = FirSpec(),
        out_dt: float = 1e-5,
        corner: float | None = None,
        antialias_numtaps: int = 31,
    ):
        if corner is not None and not f < corner < sample_rate / 2:
            raise ValueError("need carrier < anti-alias corner < sample_rate/2")
        if not f + fir.rate / 2 < sample_rate / 2:
            raise ValueError("carrier band must lie below sample_rate/2")
        d1 = sample_rate / fir.rate
        d2 = fir.rate * out_dt
        if abs(d1 - round(d1)) > 1e-9 or abs(d2 - round(d2)) > 1e-6 or round(d2) < 1:
            raise ValueError("sample_rate/fir.rate and fir.rate*out_dt must be integers")
        if out_dt > 1.0 / (2.0 * fir.cutoff):
            raise ValueError("out_dt too long for the FIR cutoff (Nyquist)")
        self.sample_rate = sample_rate
        self.f = f
        self.phases = tuple(np.broadcast_to(np.asarray(phase, dtype=float), (2,)))
        self.out_dt = out_dt
        self.fir = fir
        self._d2 = int(round(d2))
        aa = antialias_taps(sample_rate, corner, antialias_numtaps) if corner is not None else None
        s1 = _stage1_taps(sample_rate, fir.rate)
        s2 = fir.coefficients()
        self._aa = [DecimatingFir(aa, 1) for _ in range(2)] if aa is not None else None
        self._s1 = [DecimatingFir(s1, int(round(d1))) for _ in range(2)]
        self._s2 = [DecimatingFir(s2, self._d2) for _ in range(2)]

    @property
    def half_span(self) -> float:
        """Seconds of input needed on each side of an output record."""
        aa = self._aa[0].half if self._aa else 0
        return (aa + self._s1[0].half) / self.sample_rate + self._s2[0].half / self.fir.rate

    def process(self, trace: RfTrace) -> Records:
        outs = []
        for ch, x in enumerate((trace.samples_bhd1, trace.samples_bhd2)):
            start = trace.start_index
            if self._aa is not None:
                start, x = self._aa[ch].process(x, start)
            mixed = x * (2.0 * carrier(start, x.size, self.sample_rate, self.f, self.phases[ch]))
            m1, y1 = self._s1[ch].process(mixed, start)
            m2, y2 = self._s2[ch].process(y1, m1)
            outs.append((m2, y2))
        (m2, u), (_, v) = outs
        return Records((m2 + np.arange(u.size)) * self.out_dt, u, v)


def antialias(trace: RfTrace, corner: float = 5e7, numtaps: int = 31) -> RfTrace:
    """Linear-phase emulation of the analogue anti-alias lowpass.

    The output drops ``numtaps // 2`` edge samples at each end.
    """
    taps = antialias_taps(trace.sample_rate, corner, numtaps)
    out = []
    for x in (trace.samples_bhd1, trace.samples_bhd2):
        start, y = DecimatingFir(taps, 1).process(x, trace.start_index)
        out.append(y)
    return trace.with_samples(out[0], out[1], start)


def demodulate(
    trace: RfTrace,
    f: float = 5e6,
    phase=0.0,
    fir: FirSpec = FirSpec(),
    out_dt: float = 1e-5,
) -> Records:
    """Demodulate a whole trace at ``f`` into uncalibrated records."""
    return DemodChain(trace.sample_rate, f, phase, fir, out_dt).process(trace)


@dataclass(frozen=True)
class CalibrationScale:
    """Variance factors taking raw demodulated readings to vacuum units."""

    scale_u: float
    scale_v: float

    def __post_init__(self):
        if not (self.scale_u > 0 and self.scale_v > 0):
            raise ValueError("calibration scales must be > 0")

    def apply(self, records: Records) -> Records:
        return records.scaled(math.sqrt(self.scale_u), math.sqrt(self.scale_v))

    def to_dict(self) -> dict:
        return {"scale_u": self.scale_u, "scale_v": self.scale_v}

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationScale":
        return cls(float(data["scale_u"]), float(data["scale_v"]))


def calibrate(vacuum_records: Records, min_records: int = MIN_CALIBRATION_RECORDS) -> CalibrationScale:
    """Scales that make the (mean-subtracted) vacuum variance exactly 1."""
    if len(vacuum_records) < min_records:
        raise ValueError(f"calibration needs >= {min_records} records, got {len(vacuum_records)}")
    var_u = sample_variance(vacuum_records.u)
    var_v = sample_variance(vacuum_records.v)
    if var_u <= 0 or var_v <= 0:
        raise ValueError("calibration data has zero variance")
    return CalibrationScale(1.0 / var_u, 1.0 / var_v)
