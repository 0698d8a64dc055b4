"""Columnar container for simultaneous BHD1/BHD2 readings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class SampleRecord(NamedTuple):
    t: float
    u: float
    v: float


@dataclass(frozen=True, eq=False)
class Records:
    """Times ``t`` (s) with readings ``u`` (BHD1) and ``v`` (BHD2).

    Iterating yields :class:`SampleRecord` tuples. Arrays are read-only.
    """

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        arrays = [np.array(a, dtype=float).reshape(-1) for a in (self.t, self.u, self.v)]
        if not arrays[0].size == arrays[1].size == arrays[2].size:
            raise ValueError("t, u, v must have equal lengths")
        for name, a in zip("tuv", arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.t.size

    def __iter__(self):
        for t, u, v in zip(self.t, self.u, self.v):
            yield SampleRecord(float(t), float(u), float(v))

    def __getitem__(self, item):
        if isinstance(item, slice) or isinstance(item, np.ndarray):
            return Records(self.t[item], self.u[item], self.v[item])
        return SampleRecord(float(self.t[item]), float(self.u[item]), float(self.v[item]))

    def scaled(self, su: float, sv: float) -> "Records":
        return Records(self.t, self.u * su, self.v * sv)

    def between(self, t0: float, t1: float) -> "Records":
        mask = (self.t >= t0) & (self.t <= t1)
        return self[mask]

    @classmethod
    def from_records(cls, seq) -> "Records":
        arr = np.array([tuple(r) for r in seq], dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def concatenate(cls, parts) -> "Records":
        parts = list(parts)
        return cls(
            np.concatenate([p.t for p in parts]),
            np.concatenate([p.u for p in parts]),
            np.concatenate([p.v for p in parts]),
        )


@dataclass(frozen=True, eq=False)
class RfTrace:
    """Two photocurrent channels sampled at ``sample_rate``.

    Sample ``k`` sits at global index ``start_index + k``, i.e. at time
    ``(start_index + k) / sample_rate``; negative times are pre-roll.
    """

    sample_rate: float
    samples_bhd1: np.ndarray
    samples_bhd2: np.ndarray
    carrier_f: float = 5e6
    start_index: int = 0

    def __post_init__(self):
        a = np.asarray(self.samples_bhd1, dtype=float).reshape(-1)
        b = np.asarray(self.samples_bhd2, dtype=float).reshape(-1)
        if a.size != b.size:
            raise ValueError("channels must have equal lengths")
        if not self.sample_rate > 2 * self.carrier_f:
            raise ValueError("sample_rate must exceed twice the carrier frequency")
        object.__setattr__(self, "samples_bhd1", a)
        object.__setattr__(self, "samples_bhd2", b)
        object.__setattr__(self, "start_index", int(self.start_index))

    def __len__(self) -> int:
        return self.samples_bhd1.size

    @property
    def t(self) -> np.ndarray:
        return (self.start_index + np.arange(len(self))) / self.sample_rate

    def with_samples(self, a, b, start_index: int) -> "RfTrace":
        return RfTrace(self.sample_rate, a, b, self.carrier_f, start_index)

    @classmethod
    def concatenate(cls, parts) -> "RfTrace":
        parts = list(parts)
        first = parts[0]
        for prev, nxt in zip(parts, parts[1:]):
            if nxt.start_index != prev.start_index + len(prev):
                raise ValueError("trace chunks are not contiguous")
        return cls(
            first.sample_rate,
            np.concatenate([p.samples_bhd1 for p in parts]),
            np.concatenate([p.samples_bhd2 for p in parts]),
            first.carrier_f,
            first.start_index,
        )

    def to_csv(self, path) -> None:
        """Write columns ``t,i1,i2`` with 17 significant digits."""
        data = np.column_stack([self.t, self.samples_bhd1, self.samples_bhd2])
        np.savetxt(path, data, delimiter=",", header="t,i1,i2", comments="", fmt="%.17g")

    def to_binary(self, path) -> None:
        """Write interleaved little-endian float64 pairs ``(i1, i2)``."""
        data = np.column_stack([self.samples_bhd1, self.samples_bhd2]).astype("<f8")
        data.tofile(path)

    @classmethod
    def from_binary(cls, path, sample_rate: float, carrier_f: float = 5e6, start_index: int = 0) -> "RfTrace":
        data = np.fromfile(path, dtype="<f8").reshape(-1, 2)
        return cls(sample_rate, data[:, 0].copy(), data[:, 1].copy(), carrier_f, start_index)
