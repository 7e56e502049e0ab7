"""Sobolev, space-time Lebesgue, p-variation and Y^s norms."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .projections import Trajectory, twist_phases
from .spectral import SpectralField, coeffs_to_grid

__all__ = [
    "hs_norm",
    "l2_norm",
    "lp_spacetime_norm",
    "lp_norm_of_samples",
    "vp_variation_norm",
    "vp_variation_exhaustive",
    "vp_variation_batch",
    "twisted_paths",
    "ys_norm",
    "v2_twisted_norm",
    "sup_hs_norm",
]


def hs_norm(f: SpectralField, s: float = 0.0) -> float:
    """``(sum_xi <xi>^{2s} |c(xi)|^2)^{1/2}`` summed over components.

    Uses the normalized coefficients, so a unit plane wave has norm 1 for
    every ``s`` when ``xi = 0``.
    """
    w = f.lattice.bracket(2 * s)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def l2_norm(f: SpectralField) -> float:
    """True ``L^2`` norm over the torus of side ``2*pi*L`` (Plancherel)."""
    return float(np.sqrt(f.lattice.volume) * hs_norm(f, 0.0))


def sup_hs_norm(traj: Trajectory, s: float = 0.0) -> float:
    w = traj.lattice.bracket(2 * s)
    per_t = np.sum((w * np.abs(traj.data) ** 2).reshape(traj.n, -1), axis=1)
    return float(np.sqrt(per_t.max()))


def lp_norm_of_samples(time_slices, p: float, dt: float, volume: float) -> float:
    """Rectangle-rule ``L^p`` norm from an iterable of physical sample arrays.

    Each slice has shape ``(c, n, ..., n)``; the pointwise modulus is the
    Euclidean norm over components.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    acc = 0.0
    for x in time_slices:
        mod = np.sqrt(np.sum(np.abs(x) ** 2, axis=0))
        if np.isinf(p):
            acc = max(acc, float(mod.max()))
        else:
            acc += dt * volume * float(np.mean(mod**p))
    return acc if np.isinf(p) else acc ** (1.0 / p)


def lp_spacetime_norm(traj: Trajectory, p: float, grid: int | None = None) -> float:
    """``L^p`` norm over one period ``[0, n*dt)`` times the torus.

    Time: left-endpoint rectangle rule. Space: grid average of ``|u|^p``
    times the torus volume, on the lattice product grid unless ``grid`` is
    given; exact for ``p = 2``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    lat = traj.lattice
    n = grid or lat.grid
    slices = (coeffs_to_grid(traj.data[j], lat.K, lat.d, n) for j in range(traj.n))
    return lp_norm_of_samples(slices, p, traj.dt, lat.volume)


def _increments(samples: np.ndarray) -> np.ndarray:
    """Pairwise distance matrix ``|v_j - v_i|`` of a sampled path."""
    flat = samples.reshape(samples.shape[0], -1)
    diff = flat[None, :, :] - flat[:, None, :]
    return np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1))


def vp_variation_norm(samples, p: float, append_zero: bool = False) -> float:
    """Exact ``p``-variation over partitions drawn from the sample indices.

    ``append_zero`` adds a terminal zero sample, the convention
    ``v(t_K) = 0`` at ``t_K = infinity`` used for paths cut off by
    ``1_[0,T)``. Dynamic program over the last partition point, O(n^2).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    v = np.asarray(samples, dtype=complex)
    if v.shape[0] == 0:
        raise ValueError("empty path")
    if v.ndim == 1:
        v = v[:, None]
    if append_zero:
        v = np.concatenate([v, np.zeros((1,) + v.shape[1:], dtype=complex)])
    n = v.shape[0]
    dist_p = _increments(v) ** p
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = max(0.0, float(np.max(best[:j] + dist_p[:j, j])))
    return float(best.max() ** (1.0 / p))


def vp_variation_exhaustive(samples, p: float, append_zero: bool = False) -> float:
    """Brute force over every subset of sample indices (oracle, small n only)."""
    v = np.asarray(samples, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if append_zero:
        v = np.concatenate([v, np.zeros((1,) + v.shape[1:], dtype=complex)])
    n = v.shape[0]
    if n > 16:
        raise ValueError("exhaustive search limited to 16 samples")
    dist_p = _increments(v) ** p
    best = 0.0
    for r in range(2, n + 1):
        for idx in combinations(range(n), r):
            total = sum(dist_p[idx[k - 1], idx[k]] for k in range(1, r))
            best = max(best, total)
    return best ** (1.0 / p)


def vp_variation_batch(paths: np.ndarray, p: float = 2.0, append_zero: bool = False) -> np.ndarray:
    """``p``-variation of many paths at once.

    ``paths`` has shape ``(n, m)`` (m scalar paths) or ``(n, c, m)`` (m paths
    in C^c). Returns the m norms.
    """
    v = np.asarray(paths, dtype=complex)
    if v.ndim == 2:
        v = v[:, None, :]
    if append_zero:
        v = np.concatenate([v, np.zeros((1,) + v.shape[1:], dtype=complex)])
    n, _, m = v.shape
    best = np.zeros((n, m))
    for j in range(1, n):
        inc = np.sum(np.abs(v[:j] - v[j][None]) ** 2, axis=1) ** (p / 2)
        best[j] = np.maximum(0.0, np.max(best[:j] + inc, axis=0))
    return best.max(axis=0) ** (1.0 / p)


def twisted_paths(traj: Trajectory, sigma: float) -> np.ndarray:
    """``t_j -> exp(i t_j sigma |k|^2) u_hat(t_j, xi)``, shape ``(n, c, modes)``."""
    tw = traj.data * twist_phases(traj.lattice, sigma, traj.times)
    return tw.reshape(traj.n, traj.c, -1)


def ys_norm(traj: Trajectory, sigma: float, s: float = 0.0, append_zero: bool = True) -> float:
    """``Y^s_sigma`` norm: weighted l^2 sum of per-mode V^2 norms of twisted paths.

    For C^c valued fields each mode carries a C^c valued path.
    """
    paths = twisted_paths(traj, sigma)
    w = traj.lattice.bracket(2 * s).reshape(-1)
    live = np.any(paths != 0, axis=(0, 1))
    v2 = np.zeros(w.shape)
    if live.any():
        v2[live] = vp_variation_batch(paths[:, :, live], 2.0, append_zero)
    return float(np.sqrt(np.sum(w * v2**2)))


def v2_twisted_norm(traj: Trajectory, sigma: float, append_zero: bool = True) -> float:
    """``V^2_{sigma Laplacian} L^2``: 2-variation of the whole twisted path in L^2."""
    tw = twisted_paths(traj, sigma) * np.sqrt(traj.lattice.volume)
    return vp_variation_norm(tw.reshape(traj.n, -1), 2.0, append_zero)
