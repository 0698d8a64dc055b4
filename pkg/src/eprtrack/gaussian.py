"""Gaussian states of optical modes in the quadrature picture.

Conventions used throughout the package:

* Quadratures are ordered mode by mode, ``(x1, y1, x2, y2, ...)``.
* The commutator is normalised to ``[X, Y] = 2i``, so the vacuum covariance
  matrix is the identity and a physical state has all symplectic eigenvalues
  ``>= 1``.
* Phase rotations are right-handed: rotating the mean ``(a, b)`` by
  ``pi/2`` gives ``(-b, a)``.

Every operation is a pure function returning a new :class:`QuadratureState`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PHYSICALITY_TOL",
    "LossChannel",
    "QuadratureState",
    "UnphysicalStateError",
    "beamsplitter",
    "beamsplitter_symplectic",
    "db_to_r",
    "displace",
    "homodyne_moments",
    "is_symplectic",
    "joint_quadrature_variance",
    "loss",
    "omega",
    "phase_rotate",
    "rotation_matrix",
    "squeeze",
    "squeeze_symplectic",
    "symplectic_eigenvalues",
    "vacuum",
]

PHYSICALITY_TOL = 1e-9
SYMMETRY_TOL = 1e-10


class UnphysicalStateError(ValueError):
    """Raised when a covariance matrix violates the uncertainty principle."""


def omega(n_modes: int) -> np.ndarray:
    """Standard symplectic form, one ``[[0, 1], [-1, 0]]`` block per mode."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Sorted symplectic eigenvalues of a ``2N x 2N`` covariance matrix.

    Computed from the spectrum of ``i * Omega @ cov``, which comes in
    ``+/- nu`` pairs; one of each pair is returned.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.linalg.eigvals(1j * omega(n) @ cov)
    nu = np.sort(np.abs(ev.real))
    return nu[::2]


def is_symplectic(s: np.ndarray, atol: float = 1e-10) -> bool:
    s = np.asarray(s, dtype=float)
    om = omega(s.shape[0] // 2)
    return bool(np.allclose(s @ om @ s.T, om, atol=atol, rtol=0.0))


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def db_to_r(db: float) -> float:
    """Squeeze parameter ``r`` whose squeezed variance is ``10**(-db/10)``."""
    if db < 0:
        raise ValueError(f"squeezing in dB must be >= 0, got {db}")
    return float(np.log(10.0 ** (db / 20.0)))


@dataclass(frozen=True, eq=False)
class QuadratureState:
    """Mean vector and covariance matrix of ``n_modes`` Gaussian modes.

    The arrays are copied and made read-only on construction. Symmetry,
    finiteness and physicality (symplectic eigenvalues ``>= 1 - 1e-9``) are
    checked; an unphysical covariance raises :class:`UnphysicalStateError`.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 or mean.size == 0:
            raise ValueError("mean must have even, non-zero length 2N")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state contains non-finite entries")
        scale = max(float(np.max(np.abs(cov))), 1.0)
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        nu_min = symplectic_eigenvalues(cov)[0]
        if nu_min < 1.0 - PHYSICALITY_TOL:
            raise UnphysicalStateError(
                f"smallest symplectic eigenvalue {nu_min:.12g} < 1"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def mode_cov(self, mode: int) -> np.ndarray:
        self._check_mode(mode)
        return self.cov[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2].copy()

    def mode_mean(self, mode: int) -> np.ndarray:
        self._check_mode(mode)
        return self.mean[2 * mode:2 * mode + 2].copy()

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` quadrature vectors from the Gaussian, shape ``(n, 2N)``."""
        return rng.multivariate_normal(self.mean, self.cov, size=n, method="cholesky")

    def _check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes} modes")

    def _apply(self, s: np.ndarray, modes: tuple[int, ...]) -> "QuadratureState":
        idx = np.array([2 * m + k for m in modes for k in (0, 1)])
        full = np.eye(self.mean.size)
        full[np.ix_(idx, idx)] = s
        return QuadratureState(full @ self.mean, full @ self.cov @ full.T)


@dataclass(frozen=True)
class LossChannel:
    """Pure-loss channel with power transmission ``eta``."""

    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"loss efficiency must lie in [0, 1], got {self.eta}")


def vacuum(n_modes: int) -> QuadratureState:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return QuadratureState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def squeeze_symplectic(r: float, theta: float) -> np.ndarray:
    """Single-mode squeezer whose squeezed quadrature is ``X cos(theta) + Y sin(theta)``."""
    rot = rotation_matrix(theta)
    return rot @ np.diag([np.exp(-r), np.exp(r)]) @ rot.T


def squeeze(state: QuadratureState, mode: int, r: float, theta: float = 0.0) -> QuadratureState:
    """Squeeze ``mode`` by ``r`` along the quadrature at angle ``theta``.

    ``theta = 0`` squeezes X (vacuum -> ``diag(e^{-2r}, e^{2r})``),
    ``theta = pi/2`` squeezes Y.
    """
    if r < 0:
        raise ValueError("squeeze parameter must be >= 0; rotate with theta instead")
    state._check_mode(mode)
    return state._apply(squeeze_symplectic(r, theta), (mode,))


def beamsplitter_symplectic(transmissivity: float, phase: float = 0.0) -> np.ndarray:
    """4x4 symplectic matrix of a beam splitter acting on modes ``(i, j)``.

    The mode operators transform with the unitary
    ``[[t, -r e^{-i phase}], [r e^{i phase}, t]]`` where ``t = sqrt(T)``,
    ``r = sqrt(1 - T)``. At ``phase = 0`` and ``T = 1/2`` the outputs are
    ``(a_i - a_j)/sqrt(2)`` and ``(a_i + a_j)/sqrt(2)``. The inverse is the
    same splitter with ``phase + pi``.
    """
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    t = np.sqrt(transmissivity)
    r = np.sqrt(1.0 - transmissivity)
    u = np.array([[t, -r * np.exp(-1j * phase)], [r * np.exp(1j * phase), t]])
    s = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            re, im = u[a, b].real, u[a, b].imag
            s[2 * a:2 * a + 2, 2 * b:2 * b + 2] = [[re, -im], [im, re]]
    return s


def beamsplitter(
    state: QuadratureState,
    mode_i: int,
    mode_j: int,
    transmissivity: float,
    phase: float = 0.0,
) -> QuadratureState:
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    state._check_mode(mode_i)
    state._check_mode(mode_j)
    return state._apply(beamsplitter_symplectic(transmissivity, phase), (mode_i, mode_j))


def displace(state: QuadratureState, mode: int, dx: float, dy: float) -> QuadratureState:
    state._check_mode(mode)
    mean = state.mean.copy()
    mean[2 * mode] += dx
    mean[2 * mode + 1] += dy
    return QuadratureState(mean, state.cov)


def loss(state: QuadratureState, mode: int, channel: LossChannel | float) -> QuadratureState:
    """Mix ``mode`` with vacuum: ``V -> eta V + (1 - eta) I``, ``mean -> sqrt(eta) mean``."""
    if not isinstance(channel, LossChannel):
        channel = LossChannel(float(channel))
    state._check_mode(mode)
    eta = channel.eta
    k = np.ones(state.mean.size)
    k[2 * mode:2 * mode + 2] = np.sqrt(eta)
    cov = state.cov * np.outer(k, k)
    cov[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2] += (1.0 - eta) * np.eye(2)
    return QuadratureState(state.mean * k, cov)


def phase_rotate(state: QuadratureState, mode: int, phi: float) -> QuadratureState:
    state._check_mode(mode)
    return state._apply(rotation_matrix(phi), (mode,))


def homodyne_moments(state: QuadratureState, mode: int, theta: float) -> tuple[float, float]:
    """Mean and variance of ``X cos(theta) + Y sin(theta)`` on ``mode``."""
    c = np.array([np.cos(theta), np.sin(theta)])
    return float(c @ state.mode_mean(mode)), float(c @ state.mode_cov(mode) @ c)


def joint_quadrature_variance(
    state: QuadratureState,
    mode_i: int,
    mode_j: int,
    quadrature: str,
    sign: int | str,
) -> float:
    """Variance of ``(q_i +/- q_j)/sqrt(2)`` for ``q`` in ``{"X", "Y"}``."""
    if mode_i == mode_j:
        raise ValueError("joint variance needs two distinct modes")
    state._check_mode(mode_i)
    state._check_mode(mode_j)
    offset = {"X": 0, "Y": 1}[quadrature.upper()]
    s = {"+": 1.0, "-": -1.0, 1: 1.0, -1: -1.0}[sign]
    c = np.zeros(state.mean.size)
    c[2 * mode_i + offset] = 1.0
    c[2 * mode_j + offset] = s
    c /= np.sqrt(2.0)
    return float(c @ state.cov @ c)
