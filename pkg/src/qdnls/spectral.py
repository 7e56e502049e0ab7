"""Frequency lattices, spectral fields and the exact Fourier-multiplier calculus.

A field on the torus of side ``2*pi*L`` is stored by its normalized Fourier
coefficients ``c[xi]`` so that ``f(x) = sum_xi c[xi] exp(i xi.x / L)``, with
``xi`` running over the cube ``{-K, ..., K}^d`` in lexicographic order.
Coefficient arrays have shape ``(c, 2K+1, ..., 2K+1)``.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import BinaryIO

import numpy as np
import scipy.fft as sfft

__all__ = [
    "FrequencyLattice",
    "SpectralField",
    "FieldTriple",
    "build_lattice",
    "to_physical",
    "from_physical",
    "free_evolution",
    "free_multiplier",
    "gradient",
    "divergence",
    "laplacian",
    "conjugate",
    "pointwise_product",
    "fft_workers",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = b"QDNLS1"


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by ``QDNLS_THREADS`` when set."""
    cap = os.environ.get("QDNLS_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


@dataclass(frozen=True)
class FrequencyLattice:
    d: int
    K: int
    L: float = 1.0
    grid: int = 0

    def __post_init__(self):
        if not (1 <= self.d <= 4):
            raise ValueError(f"dimension d must be in 1..4, got {self.d}")
        if self.K < 1:
            raise ValueError(f"cutoff K must be >= 1, got {self.K}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"period scale L must be positive, got {self.L}")
        if self.grid == 0:
            object.__setattr__(self, "grid", sfft.next_fast_len(3 * self.K + 2))
        elif self.grid < 3 * self.K + 2:
            raise ValueError("product grid must have at least 3K+2 points per axis")

    @property
    def side(self) -> int:
        return 2 * self.K + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def n_modes(self) -> int:
        return self.side**self.d

    @property
    def volume(self) -> float:
        return (2 * np.pi * self.L) ** self.d

    @cached_property
    def axis_modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode vectors, shape ``(d, 2K+1, ..., 2K+1)``."""
        return np.stack(np.meshgrid(*([self.axis_modes] * self.d), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers ``xi / L``."""
        return self.modes / self.L

    @cached_property
    def xi_sq(self) -> np.ndarray:
        """Integer ``|xi|^2``."""
        return np.sum(self.modes.astype(np.int64) ** 2, axis=0)

    @cached_property
    def k_sq(self) -> np.ndarray:
        """Physical ``|xi/L|^2``, the symbol of ``-Laplacian``."""
        return self.xi_sq / self.L**2

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_sq)

    def bracket(self, s: float) -> np.ndarray:
        """Weights ``<k>^s = (1 + |k|^2)^(s/2)``."""
        return (1.0 + self.k_sq) ** (s / 2)

    def zeros(self, c: int = 1) -> "SpectralField":
        return SpectralField(self, np.zeros((c,) + self.shape, dtype=complex))

    def index_of(self, xi) -> tuple[int, ...]:
        xi = tuple(int(x) for x in xi)
        if len(xi) != self.d or any(abs(x) > self.K for x in xi):
            raise ValueError(f"mode {xi} not on lattice d={self.d}, K={self.K}")
        return tuple(x + self.K for x in xi)

    def single_mode(self, xi, value: complex = 1.0, c: int = 1, component: int = 0) -> "SpectralField":
        f = self.zeros(c)
        f.coeffs[(component,) + self.index_of(xi)] = value
        return f

    def random_field(self, rng: np.random.Generator, c: int = 1, envelope=None) -> "SpectralField":
        """Independent standard complex Gaussian coefficients, optionally weighted."""
        z = rng.standard_normal((2, c) + self.shape)
        coeffs = (z[0] + 1j * z[1]) / np.sqrt(2)
        if envelope is not None:
            coeffs = coeffs * envelope
        return SpectralField(self, coeffs)


def build_lattice(d: int, K: int, L: float = 1.0) -> FrequencyLattice:
    return FrequencyLattice(int(d), int(K), float(L))


@dataclass
class SpectralField:
    lattice: FrequencyLattice
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim == self.lattice.d:
            self.coeffs = self.coeffs[None]
        if self.coeffs.shape[1:] != self.lattice.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match lattice {self.lattice.shape}"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("field coefficients must be finite")

    @property
    def c(self) -> int:
        return self.coeffs.shape[0]

    def copy(self) -> "SpectralField":
        return SpectralField(self.lattice, self.coeffs.copy())

    def _check(self, other: "SpectralField"):
        if other.lattice != self.lattice:
            raise ValueError("lattice mismatch")
        if other.c != self.c:
            raise ValueError("component mismatch")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.lattice, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.lattice, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.lattice, self.coeffs * scalar)

    __rmul__ = __mul__

    def component(self, j: int) -> "SpectralField":
        return SpectralField(self.lattice, self.coeffs[j : j + 1])

    def multiply(self, symbol: np.ndarray) -> "SpectralField":
        """Apply a Fourier multiplier given on the lattice."""
        return SpectralField(self.lattice, self.coeffs * symbol)


@dataclass
class FieldTriple:
    """State ``(u, v, w)``; each component is C^d valued on a shared lattice."""

    u: SpectralField
    v: SpectralField
    w: SpectralField

    def __post_init__(self):
        lat = self.u.lattice
        for f in (self.v, self.w):
            if f.lattice != lat:
                raise ValueError("all three fields must share a lattice")
        for f in (self.u, self.v, self.w):
            if f.c != lat.d:
                raise ValueError("u, v, w must have d components")

    @property
    def lattice(self) -> FrequencyLattice:
        return self.u.lattice

    def __iter__(self):
        return iter((self.u, self.v, self.w))

    @classmethod
    def zeros(cls, lattice: FrequencyLattice) -> "FieldTriple":
        return cls(lattice.zeros(lattice.d), lattice.zeros(lattice.d), lattice.zeros(lattice.d))


# --- transforms -------------------------------------------------------------


def _embed(coeffs: np.ndarray, K: int, d: int, n: int) -> np.ndarray:
    """Scatter lattice coefficients into an n-point FFT array (wrapped order)."""
    lead = coeffs.shape[: coeffs.ndim - d]
    out = np.zeros(lead + (n,) * d, dtype=complex)
    idx = np.arange(-K, K + 1) % n
    out[(Ellipsis,) + np.ix_(*([idx] * d))] = coeffs
    return out


def _extract(spec: np.ndarray, K: int, d: int, n: int) -> np.ndarray:
    idx = np.arange(-K, K + 1) % n
    return spec[(Ellipsis,) + np.ix_(*([idx] * d))]


def coeffs_to_grid(coeffs: np.ndarray, K: int, d: int, n: int) -> np.ndarray:
    """Evaluate trailing-``d``-axis coefficient arrays on an n^d grid."""
    if n < 2 * K + 1:
        raise ValueError("grid too coarse for lattice")
    axes = tuple(range(-d, 0))
    return sfft.ifftn(_embed(coeffs, K, d, n), axes=axes, norm="forward", workers=fft_workers())


def grid_to_coeffs(samples: np.ndarray, K: int, d: int) -> np.ndarray:
    n = samples.shape[-1]
    if any(s != n for s in samples.shape[-d:]):
        raise ValueError("physical samples must be on a cubic grid")
    if n < 2 * K + 1:
        raise ValueError("grid too coarse for lattice")
    axes = tuple(range(-d, 0))
    spec = sfft.fftn(samples, axes=axes, norm="forward", workers=fft_workers())
    return _extract(spec, K, d, n)


def to_physical(f: SpectralField, grid: int | None = None) -> np.ndarray:
    """Samples of ``f`` at ``x_j = 2*pi*L*j/n``, shape ``(c, n, ..., n)``."""
    lat = f.lattice
    return coeffs_to_grid(f.coeffs, lat.K, lat.d, grid or lat.grid)


def from_physical(samples: np.ndarray, lattice: FrequencyLattice) -> SpectralField:
    """Project grid samples onto the lattice (exact for band-limited samples)."""
    samples = np.asarray(samples)
    if samples.ndim == lattice.d:
        samples = samples[None]
    if samples.ndim != lattice.d + 1:
        raise ValueError(f"samples of shape {samples.shape} do not fit a d={lattice.d} lattice")
    return SpectralField(lattice, grid_to_coeffs(samples, lattice.K, lattice.d))


# --- multipliers ------------------------------------------------------------


def free_multiplier(lattice: FrequencyLattice, sigma: float, t: float) -> np.ndarray:
    return np.exp(-1j * sigma * t * lattice.k_sq)


def free_evolution(f: SpectralField, sigma: float, t: float) -> SpectralField:
    """``exp(i t sigma Laplacian) f``: multiply mode xi by ``exp(-i t sigma |xi/L|^2)``."""
    return f.multiply(free_multiplier(f.lattice, sigma, t))


def gradient(f: SpectralField) -> SpectralField:
    if f.c != 1:
        raise ValueError("gradient expects a scalar field")
    lat = f.lattice
    return SpectralField(lat, 1j * lat.wavenumbers * f.coeffs[0])


def divergence(f: SpectralField) -> SpectralField:
    lat = f.lattice
    if f.c != lat.d:
        raise ValueError("divergence expects a field with d components")
    return SpectralField(lat, np.sum(1j * lat.wavenumbers * f.coeffs, axis=0))


def laplacian(f: SpectralField) -> SpectralField:
    return f.multiply(-f.lattice.k_sq)


def conjugate(f: SpectralField) -> SpectralField:
    """Coefficients of the complex conjugate field: ``conj(c[-xi])``."""
    d = f.lattice.d
    flipped = np.flip(f.coeffs, axis=tuple(range(1, d + 1)))
    return SpectralField(f.lattice, np.conj(flipped))


def pointwise_product(
    f: SpectralField,
    g: SpectralField,
    conjugate_g: bool = False,
    mode: str = "auto",
) -> SpectralField:
    """Alias-free truncated product of two fields.

    ``mode`` is ``"dot"`` for the C^c dot product ``sum_j f_j g_j`` (scalar
    result), ``"componentwise"`` for equal component counts, or ``"auto"``
    which broadcasts a scalar against a vector and otherwise multiplies
    componentwise.
    """
    lat = f.lattice
    if g.lattice != lat:
        raise ValueError("lattice mismatch")
    if mode not in ("auto", "dot", "componentwise"):
        raise ValueError(f"unknown product mode {mode!r}")
    if mode in ("dot", "componentwise") and f.c != g.c:
        raise ValueError("component counts must agree for dot/componentwise products")
    if mode == "auto" and f.c != g.c and 1 not in (f.c, g.c):
        raise ValueError("incompatible component counts")
    fx = to_physical(f)
    gx = to_physical(g)
    if conjugate_g:
        gx = np.conj(gx)
    prod = fx * gx
    if mode == "dot":
        prod = prod.sum(axis=0, keepdims=True)
    return from_physical(prod, lat)


# --- snapshot format --------------------------------------------------------


def write_snapshot(f: SpectralField, fh: BinaryIO) -> None:
    lat = f.lattice
    fh.write(SNAPSHOT_MAGIC)
    fh.write(struct.pack("<iii", lat.d, lat.K, f.c))
    fh.write(struct.pack("<d", lat.L))
    pairs = np.empty(f.coeffs.size * 2, dtype="<f8")
    flat = f.coeffs.reshape(-1)
    pairs[0::2] = flat.real
    pairs[1::2] = flat.imag
    fh.write(pairs.tobytes())


def read_snapshot(fh: BinaryIO) -> SpectralField:
    magic = fh.read(len(SNAPSHOT_MAGIC))
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("not a QDNLS1 snapshot")
    d, K, c = struct.unpack("<iii", fh.read(12))
    (L,) = struct.unpack("<d", fh.read(8))
    lat = build_lattice(d, K, L)
    count = c * lat.n_modes
    raw = np.frombuffer(fh.read(16 * count), dtype="<f8")
    if raw.size != 2 * count:
        raise ValueError("truncated snapshot")
    coeffs = (raw[0::2] + 1j * raw[1::2]).reshape((c,) + lat.shape)
    return SpectralField(lat, coeffs)
