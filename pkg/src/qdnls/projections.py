"""Littlewood-Paley, sharp-set and modulation projections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .spectral import FrequencyLattice, SpectralField, fft_workers

__all__ = [
    "chi",
    "bump_weight",
    "is_dyadic",
    "dyadic_range",
    "project_dyadic",
    "CubeRegion",
    "StripRegion",
    "region_mask",
    "project_set",
    "Trajectory",
    "modulation_multiplier",
    "time_frequencies",
    "twist_phases",
    "modulation_project",
]


def _smooth_step(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1] = 1.0
    mid = (t > 0) & (t < 1)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def chi(s):
    """Even C^infinity cutoff: 1 on |s| <= 1, 0 on |s| >= 2."""
    s = np.abs(np.asarray(s, dtype=float))
    out = 1.0 - _smooth_step(s - 1.0)
    return out if out.ndim else float(out)


def is_dyadic(N) -> bool:
    try:
        n = int(N)
    except (TypeError, ValueError):
        return False
    return n == N and n >= 1 and (n & (n - 1)) == 0


def _check_dyadic(N):
    if not is_dyadic(N):
        raise ValueError(f"{N!r} is not a dyadic number 2^n, n >= 0")
    return int(N)


def bump_weight(N: int, s):
    """Littlewood-Paley bump ``psi_N(s)``; ``psi_1 = chi``."""
    N = _check_dyadic(N)
    s = np.asarray(s, dtype=float)
    out = np.asarray(chi(s) if N == 1 else chi(s / N) - chi(2.0 * s / N))
    return out if out.ndim else float(out)


def dyadic_range(max_abs: float) -> list[int]:
    """Dyadic numbers ``1, 2, ..., N_top`` with ``N_top >= max_abs``.

    The bumps in this range sum to ``chi(s / N_top)``, which is 1 for
    ``|s| <= max_abs``.
    """
    out = [1]
    while out[-1] < max_abs:
        out.append(out[-1] * 2)
    return out


def project_dyadic(f: SpectralField, N: int) -> SpectralField:
    return f.multiply(bump_weight(N, f.lattice.k_abs))


@dataclass(frozen=True)
class CubeRegion:
    """Axis-aligned cube ``{xi : |xi_i - center_i| <= side/2}``."""

    center: tuple
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("cube side must be positive")

    def contains(self, modes: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center).reshape((-1,) + (1,) * (modes.ndim - 1))
        return np.all(np.abs(modes - c) <= self.side / 2, axis=0)


@dataclass(frozen=True)
class StripRegion:
    """``(center + [-N, N]^d) ∩ {xi : |a.xi - A| <= M}`` with ``|a| = 1``."""

    center: tuple
    N: float
    direction: tuple
    offset: float
    thickness: float

    def __post_init__(self):
        a = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("strip direction must be a unit vector")
        if len(a) != len(self.center):
            raise ValueError("direction and center dimensions differ")
        if self.thickness <= 0 or self.N <= 0:
            raise ValueError("strip thickness and base size must be positive")

    def contains(self, modes: np.ndarray) -> np.ndarray:
        shape = (-1,) + (1,) * (modes.ndim - 1)
        c = np.asarray(self.center).reshape(shape)
        a = np.asarray(self.direction, dtype=float).reshape(shape)
        in_cube = np.all(np.abs(modes - c) <= self.N, axis=0)
        proj = np.sum(a * modes, axis=0)
        return in_cube & (np.abs(proj - self.offset) <= self.thickness)


def region_mask(lattice: FrequencyLattice, S) -> np.ndarray:
    """Boolean lattice mask for a region, a mask, or an iterable of modes."""
    if isinstance(S, (CubeRegion, StripRegion)):
        return S.contains(lattice.modes)
    S_arr = np.asarray(S)
    if S_arr.dtype == bool:
        if S_arr.shape != lattice.shape:
            raise ValueError("mask shape does not match lattice")
        return S_arr
    mask = np.zeros(lattice.shape, dtype=bool)
    for xi in S:
        if all(abs(int(x)) <= lattice.K for x in xi):
            mask[lattice.index_of(xi)] = True
    return mask


def project_set(f: SpectralField, S) -> SpectralField:
    return f.multiply(region_mask(f.lattice, S))


@dataclass
class Trajectory:
    """Uniform time samples ``t_j = j*dt`` of fields on a shared lattice.

    ``data`` has shape ``(n, c, 2K+1, ..., 2K+1)``.
    """

    lattice: FrequencyLattice
    data: np.ndarray
    dt: float
    sigma: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        lat = self.lattice
        if self.data.ndim != lat.d + 2 or self.data.shape[2:] != lat.shape:
            raise ValueError(f"trajectory data shape {self.data.shape} does not match lattice")
        if self.data.shape[0] < 2:
            raise ValueError("a trajectory needs at least two samples")
        if not self.dt > 0:
            raise ValueError("time step must be positive")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def c(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    @property
    def period(self) -> float:
        """Length ``n*dt`` of the time torus the samples tile."""
        return self.n * self.dt

    def field_at(self, j: int) -> SpectralField:
        return SpectralField(self.lattice, self.data[j])

    def with_data(self, data: np.ndarray, sigma=None) -> "Trajectory":
        return Trajectory(self.lattice, data, self.dt, self.sigma if sigma is None else sigma, dict(self.meta))

    def conj(self) -> "Trajectory":
        d = self.lattice.d
        flipped = np.flip(self.data, axis=tuple(range(2, d + 2)))
        return self.with_data(np.conj(flipped))

    @classmethod
    def from_fields(cls, fields, dt: float, sigma=None) -> "Trajectory":
        fields = list(fields)
        return cls(fields[0].lattice, np.stack([f.coeffs for f in fields]), dt, sigma)

    @classmethod
    def free(cls, phi: SpectralField, sigma: float, n: int, dt: float) -> "Trajectory":
        t = np.arange(n) * dt
        phase = np.exp(-1j * sigma * t[:, None] * phi.lattice.k_sq.reshape(1, -1))
        phase = phase.reshape((n, 1) + phi.lattice.shape)
        return cls(phi.lattice, phase * phi.coeffs[None], dt, sigma)


def time_frequencies(n: int, dt: float) -> np.ndarray:
    """Discrete angular frequencies ``2*pi*m/(n*dt)``, ``m`` wrapped to ``[-n/2, n/2)``."""
    return 2 * np.pi * sfft.fftfreq(n, d=dt)


def twist_phases(lattice: FrequencyLattice, sigma: float, times: np.ndarray) -> np.ndarray:
    """``exp(i t sigma |k|^2)``, shape ``(n, 1, *lattice.shape)``."""
    ph = np.exp(1j * sigma * np.multiply.outer(times, lattice.k_sq))
    return ph[:, None]


def modulation_multiplier(mu, M: int, mode: str = "band"):
    """Symbol of the modulation projections in terms of ``mu = tau + sigma|xi|^2``."""
    M = _check_dyadic(M)
    mu = np.asarray(mu, dtype=float)
    if mode == "band":
        return bump_weight(M, mu)
    low = np.zeros_like(mu) if M == 1 else chi(2.0 * mu / M)
    if mode == "low":
        return low
    if mode == "high":
        return 1.0 - low
    raise ValueError(f"unknown modulation mode {mode!r}")


def modulation_project(traj: Trajectory, sigma: float, M: int, mode: str = "band") -> Trajectory:
    """Apply ``Q_M``, ``Q_{>=M}`` or ``Q_{<M}`` to one period of a time-periodic trajectory.

    Each spatial mode is moved to the twisted frame ``exp(i t sigma |k|^2) u_hat``,
    where the modulation is the plain time frequency; the multiplier is applied
    after a DFT in time and the result is untwisted.
    """
    if traj.n < 4:
        raise ValueError("modulation projections need at least 4 time samples")
    phases = twist_phases(traj.lattice, sigma, traj.times)
    twisted = traj.data * phases
    spec = sfft.fft(twisted, axis=0, workers=fft_workers())
    mu = time_frequencies(traj.n, traj.dt)
    sym = modulation_multiplier(mu, M, mode)
    spec *= sym.reshape((-1,) + (1,) * (spec.ndim - 1))
    out = sfft.ifft(spec, axis=0, workers=fft_workers()) * np.conj(phases)
    return traj.with_data(out)
