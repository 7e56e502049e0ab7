"""The coupled quadratic-derivative system, its mild formulation and integrators.

The system for C^d valued ``u, v, w`` reads

    (i d_t + alpha Lap) u = -(div w) v
    (i d_t + beta  Lap) v = -(div conj(w)) u
    (i d_t + gamma Lap) w = grad(u . conj(v))

and with ``R = (-(div w) v, -(div conj w) u, grad(u . conj v))`` each Fourier
coefficient obeys ``d_t f = -i sigma_f |k|^2 f - i R_f``. The mild form is
therefore ``f(t) = exp(i t sigma_f Lap) f_0 - i int_0^t exp(i (t-t') sigma_f Lap) R_f dt'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, NonConvergenceError
from .projections import Trajectory
from .resonance import CoefficientTriple, classify
from .spectral import (
    FieldTriple,
    FrequencyLattice,
    SpectralField,
    coeffs_to_grid,
    grid_to_coeffs,
)

__all__ = [
    "SolutionTriple",
    "PicardReport",
    "critical_index",
    "nonlinearity",
    "duhamel_I1",
    "duhamel_I2",
    "free_triple",
    "phi_map",
    "picard_solve",
    "step_evolve",
    "mass",
    "energy",
    "scaling_transform",
    "pde_residual",
    "residual_series",
    "triple_distance",
    "single_equation_evolve",
    "reduced_triple_evolve",
    "small_data",
]

_CHUNK_BYTES = 64 * 2**20


def critical_index(d: int) -> float:
    """Scaling-critical regularity ``d/2 - 1``."""
    return d / 2 - 1


def _as_triple(coeffs) -> CoefficientTriple:
    if isinstance(coeffs, CoefficientTriple):
        return coeffs
    return classify(*coeffs)


# --- trajectories of the full state -----------------------------------------


@dataclass
class SolutionTriple:
    """Sampled ``(u, v, w)`` on a shared lattice and time grid ``t_j = j*dt``."""

    u: Trajectory
    v: Trajectory
    w: Trajectory

    def __post_init__(self):
        for tr in (self.v, self.w):
            if tr.lattice != self.u.lattice:
                raise ValueError("trajectories must share a lattice")
            if tr.n != self.u.n or abs(tr.dt - self.u.dt) > 1e-14 * self.u.dt:
                raise ValueError("trajectories must share a time grid")

    @property
    def lattice(self) -> FrequencyLattice:
        return self.u.lattice

    @property
    def n(self) -> int:
        return self.u.n

    @property
    def dt(self) -> float:
        return self.u.dt

    @property
    def times(self) -> np.ndarray:
        return self.u.times

    def __iter__(self):
        return iter((self.u, self.v, self.w))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u.data, self.v.data, self.w.data

    def state_at(self, j: int) -> FieldTriple:
        return FieldTriple(self.u.field_at(j), self.v.field_at(j), self.w.field_at(j))

    @classmethod
    def from_arrays(cls, lattice, arrays, dt, sigmas=(None, None, None)) -> "SolutionTriple":
        return cls(*(Trajectory(lattice, a, dt, s) for a, s in zip(arrays, sigmas)))


@dataclass
class PicardReport:
    iterates: int = 0
    differences: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    final_residual: float = float("nan")
    converged: bool = False
    reason: str = ""

    def as_rows(self):
        """``(iterate, difference, ratio)`` rows; the first ratio is undefined."""
        out = []
        for k, dk in enumerate(self.differences):
            r = self.ratios[k - 1] if k >= 1 else float("nan")
            out.append((k + 1, dk, r))
        return out


# --- nonlinearity -----------------------------------------------------------


def _nonlinear_arrays(U, V, W, lat: FrequencyLattice, scale: float = 1.0):
    """``R = (-(div w) v, -(div conj w) u, grad(u . conj v))`` on coefficient arrays.

    Arrays have shape ``(..., d, 2K+1, ..., 2K+1)``; leading axes are batched.
    Products are formed on the dealiased grid, so the result is the exact
    truncated convolution.
    """
    d, K, n = lat.d, lat.K, lat.grid
    kk = lat.wavenumbers
    cax = -d - 1
    divw = np.sum(1j * kk * W, axis=cax)
    ux = coeffs_to_grid(U, K, d, n)
    vx = coeffs_to_grid(V, K, d, n)
    dwx = np.expand_dims(coeffs_to_grid(divw, K, d, n), cax)
    Ru = -grid_to_coeffs(dwx * vx, K, d)
    Rv = -grid_to_coeffs(np.conj(dwx) * ux, K, d)
    uv = grid_to_coeffs(np.sum(ux * np.conj(vx), axis=cax), K, d)
    Rw = 1j * kk * np.expand_dims(uv, cax)
    if scale != 1.0:
        Ru, Rv, Rw = Ru * scale, Rv * scale, Rw * scale
    return Ru, Rv, Rw


def _batched_nonlinear(U, V, W, lat, scale=1.0):
    """Apply the nonlinearity along a leading time axis in memory-bounded chunks."""
    n_t = U.shape[0]
    per = (2 * lat.d + 1) * lat.grid**lat.d * 16 * 3
    step = max(1, _CHUNK_BYTES // per)
    out = [np.empty_like(U), np.empty_like(V), np.empty_like(W)]
    for a in range(0, n_t, step):
        b = min(n_t, a + step)
        for o, r in zip(out, _nonlinear_arrays(U[a:b], V[a:b], W[a:b], lat, scale)):
            o[a:b] = r
    return tuple(out)


def nonlinearity(state: FieldTriple) -> FieldTriple:
    """Right-hand sides ``(-(div w) v, -(div conj w) u, grad(u . conj v))``."""
    lat = state.lattice
    Ru, Rv, Rw = _nonlinear_arrays(state.u.coeffs, state.v.coeffs, state.w.coeffs, lat)
    return FieldTriple(SpectralField(lat, Ru), SpectralField(lat, Rv), SpectralField(lat, Rw))


# --- Duhamel integrals ------------------------------------------------------


def _cumulative(y: np.ndarray, dt: float, quadrature: str) -> np.ndarray:
    """``int_0^{t_j} y`` on a uniform grid along axis 0.

    ``trapezoid`` is second order; ``quartic`` uses the cubic-interpolation
    rule on each interval (one-sided at the two ends) and is fourth order.
    """
    n = y.shape[0]
    out = np.zeros_like(y)
    if n < 2:
        return out
    if quadrature == "trapezoid":
        inc = 0.5 * dt * (y[:-1] + y[1:])
    elif quadrature == "quartic":
        if n < 4:
            raise ValueError("quartic quadrature needs at least 4 samples")
        inc = np.empty_like(y[:-1])
        inc[1 : n - 2] = dt * (-y[: n - 3] + 13 * y[1 : n - 2] + 13 * y[2 : n - 1] - y[3:n]) / 24
        inc[0] = dt * (9 * y[0] + 19 * y[1] - 5 * y[2] + y[3]) / 24
        inc[n - 2] = dt * (9 * y[n - 1] + 19 * y[n - 2] - 5 * y[n - 3] + y[n - 4]) / 24
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    np.cumsum(inc, axis=0, out=out[1:])
    return out


def _twist(lat, sigma, times):
    return np.exp(1j * sigma * np.multiply.outer(times, lat.k_sq))[:, None]


def _duhamel_arrays(F: np.ndarray, lat, sigma: float, dt: float, quadrature: str) -> np.ndarray:
    """``int_0^{t_j} exp(i (t_j - t') sigma Lap) F(t') dt'`` for all samples."""
    times = np.arange(F.shape[0]) * dt
    ph = _twist(lat, sigma, times)
    return np.conj(ph) * _cumulative(ph * F, dt, quadrature)


def _check_pair(f: Trajectory, g: Trajectory):
    if f.lattice != g.lattice:
        raise ValueError("trajectories must share a lattice")
    if f.n != g.n or abs(f.dt - g.dt) > 1e-14 * f.dt:
        raise ValueError("trajectories must share a time grid")


def _duhamel_at(F, lat, sigma, dt, t, quadrature) -> SpectralField | Trajectory:
    full = _duhamel_arrays(F, lat, sigma, dt, quadrature)
    if t is None:
        return Trajectory(lat, full, dt, sigma)
    T = (F.shape[0] - 1) * dt
    if t < 0 or t > T * (1 + 1e-12):
        raise ValueError(f"t = {t} outside [0, {T}]")
    j = int(round(t / dt))
    if abs(j * dt - t) > 1e-9 * max(dt, abs(t)):
        raise ValueError("t must be a sample time of the trajectory grid")
    return SpectralField(lat, full[j])


def duhamel_I1(sigma: float, f: Trajectory, g: Trajectory, t: float | None = None,
               quadrature: str = "trapezoid"):
    """``int_0^t exp(i (t-t') sigma Lap) (div f(t')) g(t') dt'``.

    Returns the field at sample time ``t``, or the whole trajectory when
    ``t`` is None. The integrand is integrated in the twisted frame.
    """
    _check_pair(f, g)
    lat = f.lattice
    d, K, n = lat.d, lat.K, lat.grid
    if f.c != d or g.c != d:
        raise ValueError("I1 expects C^d valued trajectories")
    divf = np.sum(1j * lat.wavenumbers * f.data, axis=1)
    prod = np.expand_dims(coeffs_to_grid(divf, K, d, n), 1) * coeffs_to_grid(g.data, K, d, n)
    F = grid_to_coeffs(prod, K, d)
    return _duhamel_at(F, lat, sigma, f.dt, t, quadrature)


def duhamel_I2(sigma: float, f: Trajectory, g: Trajectory, t: float | None = None,
               quadrature: str = "trapezoid"):
    """``int_0^t exp(i (t-t') sigma Lap) grad(f(t') . g(t')) dt'`` (bilinear dot product)."""
    _check_pair(f, g)
    lat = f.lattice
    d, K, n = lat.d, lat.K, lat.grid
    if f.c != d or g.c != d:
        raise ValueError("I2 expects C^d valued trajectories")
    dot = np.sum(coeffs_to_grid(f.data, K, d, n) * coeffs_to_grid(g.data, K, d, n), axis=1)
    F = 1j * lat.wavenumbers[None] * grid_to_coeffs(dot, K, d)[:, None]
    return _duhamel_at(F, lat, sigma, f.dt, t, quadrature)


# --- mild formulation and Picard iteration ----------------------------------


def free_triple(data: FieldTriple, coeffs, n: int, dt: float) -> SolutionTriple:
    """Free evolutions ``exp(i t sigma_f Lap) f_0`` of the three data on the grid."""
    c = _as_triple(coeffs)
    sig = c.floats()
    return SolutionTriple(*(Trajectory.free(f, s, n, dt) for f, s in zip(data, sig)))


def _grid_for(T: float, dt: float | None, n_steps: int | None) -> tuple[int, float]:
    if not T > 0:
        raise ValueError("T must be positive")
    if n_steps is None:
        if dt is None or not dt > 0:
            raise ValueError("give a positive dt or n_steps")
        n_steps = max(1, math.ceil(T / dt - 1e-9))
    return n_steps + 1, T / n_steps


def phi_map(data: FieldTriple, guess: SolutionTriple, coeffs, T: float | None = None,
            quadrature: str = "trapezoid", nonlinear_scale: float = 1.0) -> SolutionTriple:
    """One application of the contraction map.

    With ``R`` the nonlinearity evaluated on ``guess``:
    ``u = exp(it alpha Lap) u0 + i I1_alpha(w, v)``,
    ``v = exp(it beta Lap) v0 + i I1_beta(conj w, u)``,
    ``w = exp(it gamma Lap) w0 - i I2_gamma(u, conj v)``.
    The factor ``i`` comes from solving ``i d_t f = ...`` for ``d_t f``.
    """
    c = _as_triple(coeffs)
    lat = guess.lattice
    if data.lattice != lat:
        raise ValueError("data and guess lattices differ")
    if T is not None and abs((guess.n - 1) * guess.dt - T) > 1e-9 * T:
        raise ValueError("guess grid does not cover [0, T]")
    sig = c.floats()
    R = _batched_nonlinear(*guess.arrays(), lat, nonlinear_scale)
    free = free_triple(data, c, guess.n, guess.dt)
    out = []
    for fr, Rf, s in zip(free.arrays(), R, sig):
        out.append(fr - 1j * _duhamel_arrays(Rf, lat, s, guess.dt, quadrature))
    return SolutionTriple.from_arrays(lat, out, guess.dt, sig)


def _sup_hs(arrays, lat, s) -> float:
    w = lat.bracket(2 * s)
    tot = 0.0
    for a in arrays:
        tot = tot + np.sum((w * np.abs(a) ** 2).reshape(a.shape[0], -1), axis=1)
    return float(np.sqrt(np.max(tot)))


def triple_distance(a: SolutionTriple, b: SolutionTriple, s: float | None = None) -> float:
    """``sup_t (sum_f ||a_f(t) - b_f(t)||_{H^s}^2)^{1/2}``; ``s`` defaults to ``d/2 - 1``."""
    lat = a.lattice
    s = critical_index(lat.d) if s is None else s
    return _sup_hs([x - y for x, y in zip(a.arrays(), b.arrays())], lat, s)


def picard_solve(data: FieldTriple, coeffs, T: float, tol: float = 1e-10, max_iter: int = 50,
                 dt: float | None = None, n_steps: int | None = 256, s: float | None = None,
                 quadrature: str = "trapezoid", residual: bool = True):
    """Iterate the contraction map from the free evolution until Cauchy.

    The metric is the sup-in-time ``H^s`` distance on the sample grid.
    Raises :class:`NonConvergenceError` (carrying the report) when three
    consecutive contraction ratios are ``>= 1``, when iterates stop being
    finite, or when ``max_iter`` is exhausted.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    c = _as_triple(coeffs)
    n, step = _grid_for(T, dt, None) if dt is not None else _grid_for(T, None, n_steps)
    lat = data.lattice
    s = critical_index(lat.d) if s is None else s
    report = PicardReport()
    cur = free_triple(data, c, n, step)
    bad = 0
    while True:
        try:
            with np.errstate(all="ignore"):
                nxt = phi_map(data, cur, c, quadrature=quadrature)
                diff = triple_distance(nxt, cur, s)
        except ValueError as exc:  # non-finite iterate rejected downstream
            report.reason = f"iterate became invalid: {exc}"
            raise NonConvergenceError(report.reason, report) from exc
        report.iterates += 1
        if not math.isfinite(diff):
            report.reason = "iterate became non-finite"
            raise NonConvergenceError(report.reason, report)
        if report.differences and report.differences[-1] > 0:
            r = diff / report.differences[-1]
            report.ratios.append(r)
            bad = bad + 1 if r >= 1 else 0
        report.differences.append(diff)
        cur = nxt
        if diff < tol:
            report.converged = True
            break
        if bad >= 3:
            report.reason = "contraction ratio >= 1 for three consecutive iterates"
            raise NonConvergenceError(report.reason, report)
        if report.iterates >= max_iter:
            report.reason = f"no convergence within {max_iter} iterates"
            raise NonConvergenceError(report.reason, report)
    if residual and cur.n >= 5:
        report.final_residual = pde_residual(cur, c, s)
    return cur, report


# --- exponential time stepper -----------------------------------------------


def _ifrk4(state, sigmas, rhs, lat, dt, n_steps, guard_norm, s, keep=True):
    """Integrating-factor RK4 for ``d_t f = -i sigma_f |k|^2 f - i R_f(state)``.

    The linear flow is applied exactly; the four stages follow the classical
    rule in the interaction picture. Returns the list of sampled arrays.
    """
    E = [np.exp(-0.5j * sg * dt * lat.k_sq) for sg in sigmas]
    E2 = [e * e for e in E]

    def f(st):
        return [-1j * r for r in rhs(st)]

    w = lat.bracket(2 * s)
    n0 = math.sqrt(sum(float(np.sum(w * np.abs(a) ** 2)) for a in state))
    limit = guard_norm * n0 if n0 > 0 else math.inf
    out = [np.empty((n_steps + 1,) + a.shape, dtype=complex) for a in state] if keep else None
    if keep:
        for o, a in zip(out, state):
            o[0] = a
    cur = [np.array(a, dtype=complex) for a in state]
    for k in range(1, n_steps + 1):
        k1 = f(cur)
        k2 = f([e * (u + 0.5 * dt * a) for e, u, a in zip(E, cur, k1)])
        k3 = f([e * u + 0.5 * dt * b for e, u, b in zip(E, cur, k2)])
        k4 = f([e2 * u + dt * e * c for e, e2, u, c in zip(E, E2, cur, k3)])
        cur = [
            e2 * u + dt / 6 * (e2 * a + 2 * e * (b + c) + dd)
            for e, e2, u, a, b, c, dd in zip(E, E2, cur, k1, k2, k3, k4)
        ]
        nrm = math.sqrt(sum(float(np.sum(w * np.abs(a) ** 2)) for a in cur))
        if not math.isfinite(nrm) or nrm > limit:
            raise BlowUpError(f"norm {nrm:.3e} exceeded guard at step {k}", step=k, t=k * dt)
        if keep:
            for o, a in zip(out, cur):
                o[k] = a
    return out if keep else cur


def step_evolve(data: FieldTriple, coeffs, T: float, dt: float, nonlinear_scale: float = 1.0,
                guard: float = 1e6, s: float | None = None) -> SolutionTriple:
    """Fourth-order exponential integrator; samples every step on ``[0, T]``.

    ``dt`` is shrunk if needed so that an integer number of steps lands on
    ``T``. ``nonlinear_scale = 0`` reduces the scheme to the exact free flow.
    The run aborts with :class:`BlowUpError` when the ``H^s`` norm of the
    state exceeds ``guard`` times its initial value.
    """
    c = _as_triple(coeffs)
    n, step = _grid_for(T, dt, None)
    lat = data.lattice
    s = critical_index(lat.d) if s is None else s
    sig = c.floats()

    def rhs(st):
        return list(_nonlinear_arrays(st[0], st[1], st[2], lat, nonlinear_scale))

    arrs = _ifrk4([f.coeffs for f in data], sig, rhs, lat, step, n - 1, guard, s)
    return SolutionTriple.from_arrays(lat, arrs, step, sig)


# --- conserved quantities ---------------------------------------------------


def mass(state: FieldTriple) -> float:
    """``2||u||^2 + ||v||^2 + ||w||^2`` in true ``L^2`` of the torus."""
    vol = state.lattice.volume
    n2 = [float(np.sum(np.abs(f.coeffs) ** 2)) for f in state]
    return vol * (2 * n2[0] + n2[1] + n2[2])


def energy(state: FieldTriple, coeffs) -> float:
    """``alpha||grad u||^2 + beta||grad v||^2 + gamma||grad w||^2 + 2 Re(w, grad(u . conj v))``."""
    c = _as_triple(coeffs)
    lat = state.lattice
    vol = lat.volume
    quad = sum(
        sg * vol * float(np.sum(lat.k_sq * np.abs(f.coeffs) ** 2))
        for sg, f in zip(c.floats(), state)
    )
    _, _, Rw = _nonlinear_arrays(state.u.coeffs, state.v.coeffs, state.w.coeffs, lat)
    cubic = 2 * vol * float(np.real(np.sum(state.w.coeffs * np.conj(Rw))))
    return quad + cubic


# --- scaling ----------------------------------------------------------------


def _scale_factor(lam):
    from fractions import Fraction

    lam = Fraction(lam).limit_denominator(10**6) if isinstance(lam, float) else Fraction(lam)
    if lam <= 0:
        raise ValueError("scaling factor must be positive")
    if lam.numerator != 1 and lam.denominator != 1:
        raise ValueError("scaling factor must be an integer or the reciprocal of an integer")
    return float(lam)


def scaling_transform(sol: SolutionTriple, lam) -> SolutionTriple:
    """``A_lam(t, x) = lam^{-1} A(lam^{-2} t, lam^{-1} x)``.

    The torus scale becomes ``lam*L`` so every mode index is kept; the
    coefficients are divided by ``lam`` and the time step multiplied by ``lam^2``.
    """
    lam = _scale_factor(lam)
    lat = sol.lattice
    new = FrequencyLattice(lat.d, lat.K, lat.L * lam, lat.grid)
    arrs = [a / lam for a in sol.arrays()]
    return SolutionTriple.from_arrays(new, arrs, sol.dt * lam * lam, tuple(t.sigma for t in sol))


# --- residual ---------------------------------------------------------------


def _time_derivative(V: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order differences along axis 0 with one-sided closures."""
    n = V.shape[0]
    if n < 5:
        raise ValueError("residual evaluation needs at least 5 time samples")
    D = np.empty_like(V)
    D[2:-2] = (V[:-4] - 8 * V[1:-3] + 8 * V[3:-1] - V[4:]) / 12
    D[0] = (-25 * V[0] + 48 * V[1] - 36 * V[2] + 16 * V[3] - 3 * V[4]) / 12
    D[1] = (-3 * V[0] - 10 * V[1] + 18 * V[2] - 6 * V[3] + V[4]) / 12
    D[-1] = (25 * V[-1] - 48 * V[-2] + 36 * V[-3] - 16 * V[-4] + 3 * V[-5]) / 12
    D[-2] = (3 * V[-1] + 10 * V[-2] - 18 * V[-3] + 6 * V[-4] - V[-5]) / 12
    return D / dt


def residual_series(sol: SolutionTriple, coeffs, s: float | None = None) -> np.ndarray:
    """Per-sample ``(sum_f ||(i d_t + sigma_f Lap) f - R_f||_{H^s}^2)^{1/2}``.

    ``d_t`` is taken in the twisted frame, where
    ``(i d_t + sigma Lap) f = exp(i t sigma Lap) i d_t (exp(-i t sigma Lap) f)``,
    so only the slow interaction dynamics is differentiated.
    """
    c = _as_triple(coeffs)
    lat = sol.lattice
    s = critical_index(lat.d) if s is None else s
    R = _batched_nonlinear(*sol.arrays(), lat)
    w = lat.bracket(2 * s)
    tot = np.zeros(sol.n)
    for a, Rf, sg in zip(sol.arrays(), R, c.floats()):
        ph = _twist(lat, sg, sol.times)
        lin = np.conj(ph) * (1j * _time_derivative(ph * a, sol.dt))
        res = lin - Rf
        tot += np.sum((w * np.abs(res) ** 2).reshape(sol.n, -1), axis=1)
    return np.sqrt(tot)


def pde_residual(sol: SolutionTriple, coeffs, s: float | None = None) -> float:
    """Sup over samples of :func:`residual_series`."""
    return float(np.max(residual_series(sol, coeffs, s)))


# --- single-equation reduction ----------------------------------------------


def single_equation_evolve(u0: SpectralField, j: int, T: float, dt: float) -> Trajectory:
    """Direct solver for ``i d_t u - Lap u = d_j(conj(u)^2)`` with scalar ``u``."""
    lat = u0.lattice
    if u0.c != 1:
        raise ValueError("single-equation mode expects a scalar datum")
    if not 0 <= j < lat.d:
        raise ValueError("derivative index out of range")
    K, d, n = lat.K, lat.d, lat.grid
    kj = lat.wavenumbers[j]
    n_t, step = _grid_for(T, dt, None)

    def rhs(st):
        ux = coeffs_to_grid(st[0], K, d, n)
        return [1j * kj * grid_to_coeffs(np.conj(ux) ** 2, K, d)]

    arrs = _ifrk4([u0.coeffs], [-1.0], rhs, lat, step, n_t - 1, 1e6, 0.0)
    return Trajectory(lat, arrs[0], step, -1.0)


def reduced_triple_evolve(u0: SpectralField, j: int, T: float, dt: float) -> Trajectory:
    """The same equation realized through the system's ``u``-equation.

    With coefficients ``(-1, 1, 1)`` and ``u = U e_1``, closing the system by
    ``v = -2 conj(u)`` and ``w = conj(U) e_j`` turns ``-(div w) v`` into
    ``d_j(conj(U)^2) e_1``. Only ``u`` is evolved; ``v`` and ``w`` are slaved.
    Returns the scalar ``U`` trajectory.
    """
    lat = u0.lattice
    if u0.c != 1:
        raise ValueError("reduction expects a scalar datum")
    if not 0 <= j < lat.d:
        raise ValueError("derivative index out of range")
    d = lat.d
    n_t, step = _grid_for(T, dt, None)
    coeffs = classify(-1, 1, 1)
    flip = tuple(range(1, d + 1))

    def rhs(st):
        u = st[0]
        ubar = np.conj(np.flip(u, axis=flip))
        v = -2 * ubar
        w = np.zeros_like(u)
        w[j] = ubar[0]
        Ru, _, _ = _nonlinear_arrays(u, v, w, lat)
        return [Ru]

    U0 = np.zeros((d,) + lat.shape, dtype=complex)
    U0[0] = u0.coeffs[0]
    arrs = _ifrk4([U0], [coeffs.floats()[0]], rhs, lat, step, n_t - 1, 1e6, 0.0)
    return Trajectory(lat, arrs[0][:, :1], step, -1.0)


# --- test data --------------------------------------------------------------


def small_data(lattice: FrequencyLattice, rng: np.random.Generator, size: float = 1e-2,
               s: float = 1.0, width: float = 2.0) -> FieldTriple:
    """Random ``(u0, v0, w0)`` with Gaussian spectral envelope ``exp(-|xi|^2 / (2 width^2))``.

    Each field is scaled to ``H^s`` norm ``size``.
    """
    env = np.exp(-lattice.xi_sq / (2 * width**2))
    out = []
    w = lattice.bracket(2 * s)
    for _ in range(3):
        f = lattice.random_field(rng, lattice.d, env)
        nrm = math.sqrt(float(np.sum(w * np.abs(f.coeffs) ** 2)))
        out.append(f * (size / nrm))
    return FieldTriple(*out)
