"""Randomized measurement of Strichartz, bilinear and trilinear estimate constants.

Every experiment returns a :class:`~qdnls.results.ResultTable` with one row
per trial. Trials draw from independent generators spawned from the master
seed, so tables are reproducible bit for bit.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import CostGuardError, IrrationalRatioError
from .norms import lp_norm_of_samples
from .projections import (
    CubeRegion,
    StripRegion,
    bump_weight,
    is_dyadic,
    modulation_multiplier,
)
from .resonance import common_sigma, scan_min_ratio, sigma_product, to_rational
from .results import ResultTable, fit_loglog_slope
from .spectral import FrequencyLattice, coeffs_to_grid

__all__ = [
    "trial_generators",
    "strichartz_ratio",
    "strip_ratio",
    "sup_ratio",
    "l4_norm_free",
    "bilinear_ratio",
    "fit_delta",
    "strichartz_slope",
    "strip_decomposition_demo",
    "trilinear_J",
    "default_modulation_cutoff",
    "J_PIECES",
    "MAX_PAIRS",
]

MAX_PAIRS = 5 * 10**7
J_PIECES = ("J1", "J2", "J31", "J32", "J33")
# low (A), high (B) or full (F) modulation part of each factor in each piece
_J_PATTERN = {
    "J1": "AAA",
    "J2": "BBB",
    "J31": "BAF",
    "J32": "FBA",
    "J33": "AFB",
}


def trial_generators(seed: int, trials: int) -> list[np.random.Generator]:
    """One independent generator per trial, split from the master seed."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _dyadic(N, name="N") -> int:
    if not is_dyadic(N):
        raise ValueError(f"{name} = {N!r} is not dyadic")
    return int(N)


def _complex_gauss(rng, shape):
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return (z[0] + 1j * z[1]) / np.sqrt(2)


def _period(sigma) -> float:
    s = float(sigma)
    if s == 0:
        raise ValueError("dispersion coefficient must be nonzero")
    return 2 * math.pi / abs(s)


def _pair_sigma(s1, s2) -> tuple[Fraction, int, int]:
    try:
        a, b = to_rational(s1), to_rational(s2)
    except TypeError as exc:
        raise IrrationalRatioError("bilinear experiments need exact rational coefficients") from exc
    if a == 0 or b == 0:
        raise ValueError("dispersion coefficients must be nonzero")
    sig = common_sigma((a, b))
    return sig, int(a / sig), int(b / sig)


def _encode(cols) -> np.ndarray:
    """Mixed-radix int64 key of integer columns (for exact grouping)."""
    key = np.zeros(len(cols[0]), dtype=np.int64)
    for c in cols:
        c = np.asarray(c, dtype=np.int64)
        lo = int(c.min()) if c.size else 0
        span = (int(c.max()) - lo + 1) if c.size else 1
        key = key * span + (c - lo)
    return key


def _grouped_sq(keys: np.ndarray, vals: np.ndarray) -> float:
    """``sum_k |sum_{keys == k} vals|^2``."""
    if keys.size == 0:
        return 0.0
    _, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=vals.real)
    im = np.bincount(inv, weights=vals.imag)
    return float(np.sum(re * re + im * im))


# --- Strichartz -------------------------------------------------------------


def strichartz_ratio(N, p, sigma=1, d: int = 3, trials: int = 50, seed: int = 0,
                     n_t: int = 8, K: int | None = None, grid: int | None = None) -> ResultTable:
    """``||P_N exp(it sigma Lap) phi||_{L^p(T_P x T^d)} / ||P_N phi||_{L^2}`` over random ``phi``.

    ``phi`` has independent standard complex Gaussian coefficients; ``P_N``
    applies the bump ``psi_N``. The period is ``P = 2 pi / |sigma|``, sampled
    at ``n_t`` equispaced times (rectangle rule) and on an ``n^d`` spatial grid
    with ``n >= 2K+1``, which makes ``p = 2`` exact.
    """
    N = _dyadic(N)
    if p < 1:
        raise ValueError("p must be >= 1")
    K = 2 * N - 1 if K is None else int(K)
    if N > K:
        raise ValueError(f"N = {N} exceeds lattice cutoff K = {K}")
    lat = FrequencyLattice(d, K)
    n = grid or sfft.next_fast_len(2 * K + 1)
    if n < 2 * K + 1:
        raise ValueError("grid too coarse")
    P = _period(sigma)
    dt = P / n_t
    w = bump_weight(N, lat.k_abs)
    live = w > 0
    ksq = lat.k_sq[live]
    s = float(sigma)
    tab = ResultTable.for_params(
        ("experiment", "d", "N", "p", "sigma", "trial", "value", "running_sup"),
        {"experiment": "strichartz", "N": N, "p": p, "sigma": sigma, "d": d, "trials": trials,
         "seed": seed, "n_t": n_t, "K": K, "grid": n},
        seed,
    )
    sup = 0.0
    coeffs = np.zeros((1,) + lat.shape, dtype=complex)
    for i, rng in enumerate(trial_generators(seed, trials)):
        c = w[live] * _complex_gauss(rng, int(live.sum()))
        l2 = math.sqrt(lat.volume) * float(np.linalg.norm(c))

        def slices():
            for j in range(n_t):
                coeffs[0][live] = c * np.exp(-1j * s * j * dt * ksq)
                yield coeffs_to_grid(coeffs, K, d, n)

        val = lp_norm_of_samples(slices(), p, dt, lat.volume) / l2
        sup = max(sup, val)
        tab.add("strichartz", d, N, p, sigma, i, val, sup)
    return tab


def _sup_by_param(table: ResultTable, param: str, value: str = "value"):
    xs = sorted(set(table.column(param)))
    sups = []
    for x in xs:
        sub = table.where(**{param: x})
        sups.append(max(sub.column(value)))
    return xs, sups


def strichartz_slope(tables) -> float:
    """Log-log slope of the per-``N`` supremum ratio across tables."""
    xs, ys = [], []
    for t in tables:
        a, b = _sup_by_param(t, "N")
        xs += a
        ys += b
    return fit_loglog_slope(xs, ys)


# --- strips -----------------------------------------------------------------


def sup_ratio(lat: FrequencyLattice, coeffs: np.ndarray, sigma, n_t: int = 16,
              oversample: int = 2) -> float:
    """Sampled ``sup |exp(it sigma Lap) phi|`` over one period divided by the coefficient l^2 norm.

    A plane wave gives exactly 1.
    """
    coeffs = np.asarray(coeffs, dtype=complex).reshape((1,) + lat.shape)
    nrm = float(np.linalg.norm(coeffs))
    if nrm == 0:
        return 0.0
    n = sfft.next_fast_len(oversample * (2 * lat.K + 1))
    P = _period(sigma)
    best = 0.0
    for j in range(n_t):
        ph = np.exp(-1j * float(sigma) * (j * P / n_t) * lat.k_sq)
        best = max(best, float(np.abs(coeffs_to_grid(coeffs * ph, lat.K, lat.d, n)).max()))
    return best / nrm


def l4_norm_free(modes: np.ndarray, coeffs: np.ndarray, sigma=1) -> float:
    """Exact ``||exp(it sigma Lap) phi||_{L^4(T_P x T^d)}`` for ``phi`` on integer ``modes``.

    Uses ``||u||_4^4 = P (2 pi)^d sum_{eta, omega} |sum c_a c_b|^2`` with pairs
    grouped by ``eta = xi_a + xi_b`` and ``omega = |xi_a|^2 + |xi_b|^2``.
    """
    modes = np.asarray(modes, dtype=np.int64)
    c = np.asarray(coeffs, dtype=complex)
    m = len(c)
    if m * m > MAX_PAIRS:
        raise CostGuardError(f"{m * m} pairs exceed budget {MAX_PAIRS}")
    d = modes.shape[1]
    a, b = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    a, b = a.ravel(), b.ravel()
    eta = modes[a] + modes[b]
    sq = np.sum(modes * modes, axis=1)
    keys = _encode([eta[:, k] for k in range(d)] + [sq[a] + sq[b]])
    tot = _grouped_sq(keys, c[a] * c[b])
    return (_period(sigma) * (2 * math.pi) ** d * tot) ** 0.25


def strip_ratio(N, M, p, sigma=1, d: int = 2, trials: int = 20, seed: int = 0, direction=None,
                offset: float = 0.0, center=None, n_t: int = 16) -> ResultTable:
    """Ratios for random data on a strip of thickness ``M`` in the cube ``center + [-N, N]^d``.

    ``p = inf``: sampled sup norm over the coefficient l^2 norm, compared with
    ``M^{1/2} N^{(d-1)/2}``. ``p = 4``: exact ``L^4`` norm over the ``L^2``
    norm, with ``M/N`` recorded as the bound variable.
    """
    N, M = _dyadic(N), _dyadic(M, "M")
    if M > N:
        raise ValueError("strip thickness M must not exceed N")
    if p not in (4, math.inf):
        raise ValueError("p must be 4 or inf")
    center = tuple([0] * d) if center is None else tuple(int(x) for x in center)
    direction = tuple([1.0] + [0.0] * (d - 1)) if direction is None else tuple(direction)
    region = StripRegion(center, N, direction, offset, M)
    K = max(abs(x) for x in center) + N
    lat = FrequencyLattice(d, K)
    mask = region.contains(lat.modes)
    modes = lat.modes[:, mask].T
    bound = math.sqrt(M) * N ** ((d - 1) / 2) if p == math.inf else M / N
    tab = ResultTable.for_params(
        ("experiment", "d", "N", "M", "p", "sigma", "trial", "value", "running_sup", "bound"),
        {"experiment": "strip", "N": N, "M": M, "p": p, "sigma": sigma, "d": d, "trials": trials,
         "seed": seed, "direction": direction, "offset": offset, "center": center, "n_t": n_t},
        seed,
    )
    sup = 0.0
    for i, rng in enumerate(trial_generators(seed, trials)):
        c = _complex_gauss(rng, len(modes))
        if p == math.inf:
            full = np.zeros(lat.shape, dtype=complex)
            full[mask] = c
            val = sup_ratio(lat, full, sigma, n_t)
        else:
            val = l4_norm_free(modes, c, sigma) / (math.sqrt(lat.volume) * float(np.linalg.norm(c)))
        sup = max(sup, val)
        tab.add("strip", d, N, M, "inf" if p == math.inf else p, sigma, i, val, sup, bound)
    return tab


# --- bilinear ---------------------------------------------------------------


@lru_cache(maxsize=4)
def _shell(N: int, d: int):
    """Integer points with ``psi_N(|xi|) > 0`` and their weights ``psi_N^2``."""
    R = 2 * N - 1
    ax = np.arange(-R, R + 1)
    pts, wts = [], []
    rest = np.stack(np.meshgrid(*([ax] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1) if d > 1 else None
    rest_sq = np.sum(rest.astype(np.int64) ** 2, axis=1) if d > 1 else None
    for x in ax:
        if d == 1:
            cand = np.array([[x]])
            sq = np.array([x * x])
        else:
            keep = rest_sq + x * x < 4 * N * N
            cand = np.concatenate([np.full((int(keep.sum()), 1), x), rest[keep]], axis=1)
            sq = rest_sq[keep] + x * x
        w = bump_weight(N, np.sqrt(sq.astype(float)))
        live = np.atleast_1d(w) > 0
        pts.append(cand[live].astype(np.int16))
        wts.append(np.atleast_1d(w)[live] ** 2)
    out_p, out_w = np.concatenate(pts), np.concatenate(wts)
    out_p.setflags(write=False)
    out_w.setflags(write=False)
    return out_p, out_w


def _random_center(rng, H: int, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.rint(H * v).astype(np.int64)


def _cube_points(center, side: int) -> np.ndarray:
    h = side // 2
    ax = np.arange(-h, side - h + 1) if side % 2 else np.arange(-h, h + 1)
    d = len(center)
    off = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    pts = off + np.asarray(center)[None]
    keep = CubeRegion(tuple(int(x) for x in center), side).contains(pts.T)
    return pts[keep]


def _ball_points(center, radius: float) -> np.ndarray:
    r = int(math.floor(radius))
    d = len(center)
    ax = np.arange(-r, r + 1)
    off = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    off = off[np.sum(off * off, axis=1) <= radius * radius]
    return off + np.asarray(center)[None]


def _product_l2_sq(m1, c1, m2, c2, k1: int, k2: int, out_weight=None) -> float:
    """``sum_{eta, omega} |w(eta) sum c1 c2|^2`` with ``omega = k1|xi1|^2 + k2|xi2|^2``."""
    n1, n2 = len(c1), len(c2)
    if n1 * n2 > MAX_PAIRS:
        raise CostGuardError(f"{n1 * n2} pairs exceed budget {MAX_PAIRS}")
    a, b = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    a, b = a.ravel(), b.ravel()
    eta = m1[a] + m2[b]
    vals = c1[a] * c2[b]
    if out_weight is not None:
        w = out_weight(np.sqrt(np.sum(eta * eta, axis=1).astype(float)))
        keep = w > 0
        a, b, eta, vals = a[keep], b[keep], eta[keep], vals[keep] * w[keep]
    sq1 = np.sum(m1 * m1, axis=1)
    sq2 = np.sum(m2 * m2, axis=1)
    omega = k1 * sq1[a] + k2 * sq2[b]
    keys = _encode([eta[:, k] for k in range(m1.shape[1])] + [omega])
    return _grouped_sq(keys, vals)


def bilinear_ratio(H, L, case: str = "HHL", sigma1=1, sigma2=1, d: int = 3, trials: int = 50,
                   seed: int = 0, s: float | None = None) -> ResultTable:
    """Bilinear ratio ``||product||_{L^2(T_P x T^d)} / (L^s ||phi_1|| ||phi_2||)`` over random data.

    ``u_1 = P_H exp(it sigma_1 Lap) phi_1`` with ``phi_1`` Gaussian on a cube of
    side ``L`` centred at a random ``xi_0``, ``|xi_0| ~ H``.

    * ``HL``: ``u_2 = P_L exp(it sigma_2 Lap) phi_2``, ``phi_2`` Gaussian on the
      whole ``L``-shell; the product is ``u_1 u_2``.
    * ``HHL``: ``phi_2`` Gaussian on the whole ``H``-shell and the product is
      ``P_L(u_1 u_2)``. Only the part of ``phi_2`` in ``{|xi + xi_0| <= 3L}``
      can reach output frequencies below ``2L``, so the numerator is computed
      exactly from it while ``||phi_2||`` runs over the full shell.

    Norms are exact: the product is grouped by space-time frequency over the
    common period ``2 pi / sigma``.
    """
    H, L = _dyadic(H, "H"), _dyadic(L, "L")
    if case not in ("HL", "HHL"):
        raise ValueError("case must be 'HL' or 'HHL'")
    sig, k1, k2 = _pair_sigma(sigma1, sigma2)
    if case == "HL" and H < L:
        raise ValueError("HL needs H >= L")
    if case == "HHL":
        if H < 4 * L:
            raise ValueError("HHL needs H >= 4L")
        if to_rational(sigma1) + to_rational(sigma2) == 0:
            raise ValueError("HHL needs sigma_1 + sigma_2 != 0")
    if s is None:
        s = d / 2 - 1 if d >= 3 else 0.0
    P = 2 * math.pi / float(sig)
    vol = (2 * math.pi) ** d
    x_bound = L / H + 1 / L
    tab = ResultTable.for_params(
        ("experiment", "d", "case", "H", "L", "sigma1", "sigma2", "trial", "value", "running_sup", "x_bound"),
        {"experiment": "bilinear", "H": H, "L": L, "case": case, "sigma1": sigma1, "sigma2": sigma2,
         "d": d, "trials": trials, "seed": seed, "s": s},
        seed,
    )
    if case == "HHL":
        shell_pts, shell_w = _shell(H, d)
    else:
        m2_fixed = _ball_points(np.zeros(d, dtype=np.int64), 2 * L - 1e-9)
        w2_fixed = bump_weight(L, np.sqrt(np.sum(m2_fixed * m2_fixed, axis=1).astype(float)))
        keep = w2_fixed > 0
        m2_fixed, w2_fixed = m2_fixed[keep], w2_fixed[keep]
    sup = 0.0
    for i, rng in enumerate(trial_generators(seed, trials)):
        xi0 = _random_center(rng, H, d)
        m1 = _cube_points(xi0, L)
        w1 = bump_weight(H, np.sqrt(np.sum(m1 * m1, axis=1).astype(float)))
        c1 = w1 * _complex_gauss(rng, len(m1))
        if case == "HHL":
            E = rng.standard_exponential(len(shell_w))
            n2sq = float(np.dot(shell_w, E))
            # the shell is sorted by first coordinate: slice the slab range first
            lo = np.searchsorted(shell_pts[:, 0], -xi0[0] - 3 * L, side="left")
            hi = np.searchsorted(shell_pts[:, 0], -xi0[0] + 3 * L, side="right")
            slab = shell_pts[lo:hi].astype(np.int64)
            near = np.sum((slab + xi0[None]) ** 2, axis=1) <= 9 * L * L
            m2 = slab[near]
            theta = rng.uniform(0, 2 * np.pi, len(m2))
            c2 = np.sqrt(shell_w[lo:hi][near] * E[lo:hi][near]) * np.exp(1j * theta)
            num = _product_l2_sq(m1, c1, m2, c2, k1, k2, lambda r: bump_weight(L, r))
        else:
            m2 = m2_fixed
            c2 = w2_fixed * _complex_gauss(rng, len(m2))
            n2sq = float(np.sum(np.abs(c2) ** 2))
            num = _product_l2_sq(m1, c1, m2, c2, k1, k2)
        n1 = math.sqrt(vol * float(np.sum(np.abs(c1) ** 2)))
        n2 = math.sqrt(vol * n2sq)
        val = math.sqrt(P * vol * num) / (L**s * n1 * n2)
        sup = max(sup, val)
        tab.add("bilinear", d, case, H, L, sigma1, sigma2, i, val, sup, x_bound)
    return tab


def fit_delta(tables) -> float:
    """Least-squares exponent ``delta`` in ``sup ratio ~ (L/H + 1/L)^delta``."""
    xs, ys = [], []
    for t in tables:
        for H in sorted(set(t.column("H"))):
            sub = t.where(H=H)
            xs.append(sub.column("x_bound")[0])
            ys.append(max(sub.column("value")))
    return fit_loglog_slope(xs, ys)


# --- strip decomposition ----------------------------------------------------


def strip_decomposition_demo(H, L, sigma1=1, sigma2=1, d: int = 3, seed: int = 0,
                             max_modes: int = 400) -> ResultTable:
    """Strip blocks of the localized high-high product and their almost orthogonality.

    ``C_1`` is the cube of side ``L`` at a random ``xi_0`` with ``|xi_0| ~ H``
    and ``C_2 = {|xi_2 + xi_0| <= 3L}``. With ``M = max(L^2/H, 1)`` the strips
    are ``R_{1,k} = {xi_1.xi_0 / |xi_0| in [Mk, M(k+1))}`` and
    ``R_{2,l} = {-xi_2.xi_0 / |xi_0| in [Ml, M(l+1))}``. Each support is
    subsampled to at most ``max_modes`` points. Rows describe blocks; the
    orthogonality ratio ``||sum blocks||^2 / sum ||block||^2`` sits in ``meta``.
    """
    H, L = _dyadic(H, "H"), _dyadic(L, "L")
    if H < 4 * L:
        raise ValueError("strip decomposition needs H >= 4L")
    sig, k1, k2 = _pair_sigma(sigma1, sigma2)
    s1, s2 = to_rational(sigma1), to_rational(sigma2)
    if s1 + s2 == 0:
        raise ValueError("strip decomposition needs sigma_1 + sigma_2 != 0")
    M = max(L * L // H, 1)
    rng = np.random.default_rng(seed)
    xi0 = _random_center(rng, H, d)
    r0 = float(np.linalg.norm(xi0))
    m1 = _cube_points(xi0, L)
    m2 = _ball_points(-xi0, 3 * L)
    if len(m1) > max_modes:
        m1 = m1[np.sort(rng.choice(len(m1), max_modes, replace=False))]
    if len(m2) > max_modes:
        m2 = m2[np.sort(rng.choice(len(m2), max_modes, replace=False))]
    c1 = bump_weight(H, np.linalg.norm(m1, axis=1)) * _complex_gauss(rng, len(m1))
    c2 = bump_weight(H, np.linalg.norm(m2, axis=1)) * _complex_gauss(rng, len(m2))
    kk = np.floor((m1 @ xi0) / (r0 * M)).astype(np.int64)
    ll = np.floor(-(m2 @ xi0) / (r0 * M)).astype(np.int64)

    a, b = np.meshgrid(np.arange(len(m1)), np.arange(len(m2)), indexing="ij")
    a, b = a.ravel(), b.ravel()
    eta = m1[a] + m2[b]
    sq1, sq2 = np.sum(m1 * m1, axis=1), np.sum(m2 * m2, axis=1)
    omega = k1 * sq1[a] + k2 * sq2[b]
    vals = c1[a] * c2[b]
    cols = [eta[:, j] for j in range(d)] + [omega]
    total = _grouped_sq(_encode(cols), vals)
    blocks = _grouped_sq(_encode([kk[a], ll[b]] + cols), vals)
    ratio = total / blocks if blocks > 0 else float("nan")

    tab = ResultTable.for_params(
        ("experiment", "d", "H", "L", "M", "k", "l", "pairs", "tf_center", "tf_min", "tf_max",
         "radius", "radius_over_M2k"),
        {"experiment": "strip-decomposition", "H": H, "L": L, "sigma1": sigma1, "sigma2": sigma2,
         "d": d, "seed": seed, "max_modes": max_modes},
        seed,
    )
    tf = -float(sig) * omega.astype(float)
    bkey = _encode([kk[a], ll[b]])
    order = np.argsort(bkey, kind="stable")
    uniq, start = np.unique(bkey[order], return_index=True)
    bounds = list(start) + [len(order)]
    for u in range(len(uniq)):
        idx = order[bounds[u] : bounds[u + 1]]
        k, l = int(kk[a[idx[0]]]), int(ll[b[idx[0]]])
        center = -float(M * M) * (float(s1) * k * k + float(s2) * l * l)
        seg = tf[idx]
        rad = float(np.max(np.abs(seg - center)))
        norm = rad / (M * M * k) if k > 0 else float("nan")
        tab.add("strip-decomposition", d, H, L, M, k, l, len(idx), center, float(seg.min()),
                float(seg.max()), rad, norm)
    tab.meta.update({"M": M, "orthogonality_ratio": ratio, "xi0": tuple(int(x) for x in xi0),
                     "blocks": len(uniq), "modes": (len(m1), len(m2))})
    return tab


# --- trilinear J decomposition ----------------------------------------------


def _support(N: int, d: int):
    pts, w2 = _shell(N, d)
    return pts.astype(np.int64), np.sqrt(w2)


def _low_mu_max(M: int, sig: float) -> float:
    """Largest discrete modulation ``|mu| = j*sig`` kept by ``Q_{<M}``."""
    if M == 1:
        return -math.inf
    return sig * (math.ceil(M / sig - 1e-12) - 1)


def default_modulation_cutoff(sigmas, Ns, d: int) -> tuple[int, Fraction]:
    """Largest dyadic ``M`` for which ``Q_{<M}`` cannot reach any resonance value.

    With ``c`` the scanned minimum of ``|h| / max|xi_j|^2`` and
    ``max|xi_j|^2 > N_max^2/4`` on the support of ``psi_{N_max}``, every
    nonzero triple has ``|h| >= c * (floor(N_max^2/4) + 1)``; the low parts
    carry modulations up to ``mu_max(M)`` each, so the cubic low product
    vanishes when ``3 mu_max(M) < c (floor(N_max^2/4) + 1)``. Returns ``(M, c)``.
    """
    Nmax = max(Ns)
    sig = float(common_sigma(sigmas))
    scan = _cached_scan(tuple(to_rational(x) for x in sigmas), 2 * Nmax - 1, min(d, 2))
    c = scan.min_ratio
    lower = float(c) * (Nmax * Nmax // 4 + 1)
    M = 1
    while 3 * _low_mu_max(2 * M, sig) < lower:
        M *= 2
    return M, c


@lru_cache(maxsize=32)
def _cached_scan(sigmas, K, d):
    return scan_min_ratio(sigmas, K, d)


def _triple_index(supports, ms, d):
    """All triples with ``xi_1 + xi_2 + xi_3 = 0`` drawn from the three supports.

    Returns index arrays into each support and ``q = h / sigma``. Pairs are
    enumerated from the two smallest supports and the third frequency is
    looked up in a dense table.
    """
    a, b, c = sorted(range(3), key=lambda j: len(supports[j][0]))
    pa, pb, pc = supports[a][0], supports[b][0], supports[c][0]
    if len(pa) * len(pb) > MAX_PAIRS:
        raise CostGuardError(f"{len(pa) * len(pb)} pairs exceed budget {MAX_PAIRS}")
    Kc = int(np.max(np.abs(pc)))
    table = np.full((2 * Kc + 1,) * d, -1, dtype=np.int64)
    table[tuple((pc + Kc).T)] = np.arange(len(pc))
    sqa, sqb, sqc = (np.sum(p * p, axis=1) for p in (pa, pb, pc))
    idx = {a: [], b: [], c: []}
    for i in range(len(pa)):
        xc = -(pa[i][None] + pb)
        inside = np.all(np.abs(xc) <= Kc, axis=1)
        jb = np.nonzero(inside)[0]
        jc = table[tuple((xc[inside] + Kc).T)]
        hit = jc >= 0
        idx[a].append(np.full(int(hit.sum()), i))
        idx[b].append(jb[hit])
        idx[c].append(jc[hit])
    out = [np.concatenate(idx[j]) if idx[j] else np.zeros(0, dtype=np.int64) for j in range(3)]
    q = ms[a] * sqa[out[a]] + ms[b] * sqb[out[b]] + ms[c] * sqc[out[c]]
    return out, q


def _triple_weights(index, q, coeffs, d):
    """``q -> (2 pi)^d sum_{triples with h/sigma = q} c_1 c_2 c_3`` as ``(qs, W)``."""
    if q.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex)
    v = coeffs[0][index[0]] * coeffs[1][index[1]] * coeffs[2][index[2]]
    lo = int(q.min())
    re = np.bincount(q - lo, weights=v.real)
    im = np.bincount(q - lo, weights=v.imag)
    W = (re + 1j * im) * (2 * math.pi) ** d
    qs = np.arange(lo, lo + len(W))
    keep = W != 0
    return qs[keep], W[keep]


def _interval_integral(k: np.ndarray, sig: float, T: float) -> np.ndarray:
    """``int_0^T exp(i sig k t) dt`` for an integer array ``k``."""
    k = np.asarray(k)
    out = np.full(k.shape, T, dtype=complex)
    nz = k != 0
    w = sig * k[nz]
    out[nz] = (np.exp(1j * w * T) - 1) / (1j * w)
    return out


def _period_integral(k: np.ndarray, P: float) -> np.ndarray:
    """``int_0^P exp(i sig k t) dt`` with ``P = 2 pi / sig``: exactly ``P [k = 0]``."""
    return np.where(np.asarray(k) == 0, P, 0.0).astype(complex)


class _TimeFactors:
    """Exact time integrals of products of ``1_[0,T)`` and its modulation parts.

    On the time torus of period ``P = 2 pi / sig`` the low part
    ``A = Q_{<M} 1_[0,T)`` is the trigonometric polynomial
    ``sum_{sig|m| < M} chi(2 sig m / M) F_m exp(i sig m t)``. With
    ``B = F - A`` and ``F^k = F`` each piece becomes a signed sum of
    ``int_I A^b exp(-i sig q t) dt`` with ``I = [0, T)`` or one full period.
    """

    _FACTOR = {"A": [(1, 0, 1)], "F": [(1, 1, 0)], "B": [(1, 1, 0), (-1, 0, 1)]}

    def __init__(self, P: float, T: float, M: int, sig: float):
        self.P, self.T, self.sig = P, T, sig
        mm = math.ceil(M / sig - 1e-12) - 1 if M > 1 else -1
        self.low_modes = max(mm, -1)
        if mm >= 0:
            m = np.arange(-mm, mm + 1)
            a = modulation_multiplier(sig * m, M, "low") * _interval_integral(-m, sig, T) / P
        else:
            a = np.zeros(1, dtype=complex)
        self.powers = {0: np.ones(1, dtype=complex)}
        cur = np.ones(1, dtype=complex)
        for b in (1, 2, 3):
            cur = np.convolve(cur, a)
            self.powers[b] = cur

    def _monomials(self, pattern: str) -> dict:
        terms = {(0, 0): 1}
        for ch in pattern:
            nxt: dict = {}
            for (f, b), c in terms.items():
                for c2, f2, b2 in self._FACTOR[ch]:
                    key = (f | f2, b + b2)
                    nxt[key] = nxt.get(key, 0) + c * c2
            terms = nxt
        return {k: c for k, c in terms.items() if c}

    def kernel(self, pattern: str, q: np.ndarray) -> np.ndarray:
        """``int_0^P prod(factors) exp(-i sig q t) dt`` for each ``q``."""
        q = np.asarray(q)
        out = np.zeros(q.shape, dtype=complex)
        for (has_f, b), c in self._monomials(pattern).items():
            coef = self.powers[b]
            half = (len(coef) - 1) // 2
            m = np.arange(-half, half + 1)
            k = m[None, :] - q[:, None]
            integ = _interval_integral(k, self.sig, self.T) if has_f else _period_integral(k, self.P)
            out += c * (integ @ coef)
        return out


def trilinear_J(N1, N2, N3, sigmas=(1, -2, -3), T=None, C_split=None, trials: int = 20,
                seed: int = 0, d: int = 3, mode: str = "nonresonant", data: str = "random",
                s: float | None = None, delta: float = 0.05) -> ResultTable:
    """Five-piece modulation decomposition of ``int_0^T int prod_j P_{N_j} u_j``.

    ``u_j = 1_[0,T) exp(it sigma_j Lap) phi_j`` with ``P_{N_j} phi_j`` random
    (``data='random'``) or single modes on a resonance witness
    (``data='witness'``). Splitting each factor at modulation ``M`` into
    ``Q_{<M}`` and ``Q_{>=M}`` parts gives ``J1 + J2 + J31 + J32 + J33``.

    On the time torus of the common period every piece equals
    ``sum_h W(h) G(h)``, with ``W(h)`` the spatial sum over frequency triples
    of resonance value ``h`` and ``G`` a time transform of products of
    ``1_[0,T)`` and its low/high modulation parts; both are computed exactly.

    ``T`` defaults to ``min(1, P)`` with ``P`` the common period. ``M`` is the
    largest dyadic ``<= N_max^2 / C_split``; by default it is
    chosen by :func:`default_modulation_cutoff` (nonresonant) or set to 2
    (``mode='resonant-demo'``).
    """
    Ns = tuple(_dyadic(N) for N in (N1, N2, N3))
    Nmax, Nmin = max(Ns), min(Ns)
    if Nmax < 2:
        raise ValueError("the decomposition needs N_max >= 2")
    try:
        sg = tuple(to_rational(x) for x in sigmas)
    except TypeError as exc:
        raise IrrationalRatioError("trilinear experiments need exact rational coefficients") from exc
    if any(x == 0 for x in sg):
        raise ValueError("dispersion coefficients must be nonzero")
    if mode not in ("nonresonant", "resonant-demo"):
        raise ValueError(f"unknown mode {mode!r}")
    resonant = sigma_product(*sg) <= 0
    if resonant and mode != "resonant-demo":
        raise ValueError("resonant coefficient triple: run with mode='resonant-demo'")
    sig = common_sigma(sg)
    ms = tuple(int(x / sig) for x in sg)
    P = 2 * math.pi / float(sig)
    T = min(1.0, P) if T is None else float(T)
    if not 0 < T <= P * (1 + 1e-12):
        raise ValueError("T must lie in (0, common period]")
    c_scan = None
    if C_split is None:
        if mode == "resonant-demo":
            M = 2
        else:
            M, c_scan = default_modulation_cutoff(sg, Ns, d)
        C_split = Nmax * Nmax / M
    else:
        if C_split <= 0:
            raise ValueError("C_split must be positive")
        M = 1
        while 2 * M <= Nmax * Nmax / C_split:
            M *= 2
    if s is None:
        s = d / 2 - 1
    supports = [_support(N, d) for N in Ns]
    if data == "witness":
        wit = _cached_scan(sg, 2 * Nmax - 1, min(d, 2)).witness
        wit = [tuple(list(x) + [0] * (d - len(x))) for x in wit]
        supports = []
        for N, xi in zip(Ns, wit):
            w = bump_weight(N, math.sqrt(sum(x * x for x in xi)))
            if w <= 0:
                raise ValueError(f"witness mode {xi} lies outside the support of psi_{N}")
            supports.append((np.array([xi], dtype=np.int64), np.array([w])))
    elif data != "random":
        raise ValueError("data must be 'random' or 'witness'")
    times = _TimeFactors(P, T, M, float(sig))
    index, q_all = _triple_index(supports, ms, d)
    cols = ("experiment", "d", "N1", "N2", "N3", "M", "trial") + tuple(
        f"{k}_over_norms" for k in J_PIECES
    ) + ("direct_over_norms", "identity_error", "weighted", "running_sup", "bound_form")
    tab = ResultTable.for_params(
        cols,
        {"experiment": "trilinear", "N": Ns, "sigmas": sg, "T": T, "C_split": C_split, "trials": trials,
         "seed": seed, "d": d, "mode": mode, "data": data},
        seed,
    )
    bound = Nmin**s * (Nmin / Nmax + 1 / Nmin) ** delta
    sup = 0.0
    vol = (2 * math.pi) ** d
    for i, rng in enumerate(trial_generators(seed, trials)):
        coeffs = [w * _complex_gauss(rng, len(p)) for p, w in supports]
        norms = math.prod(math.sqrt(vol * float(np.sum(np.abs(c) ** 2))) for c in coeffs)
        qs, W = _triple_weights(index, q_all, coeffs, d)
        J = {k: complex(np.sum(W * times.kernel(_J_PATTERN[k], qs))) for k in J_PIECES}
        direct = complex(np.sum(W * times.kernel("F", qs)))
        total = sum(J.values())
        err = abs(total - direct) / abs(direct) if direct != 0 else abs(total)
        weighted = Nmax * abs(direct) / norms
        sup = max(sup, weighted)
        tab.add("trilinear", d, *Ns, M, i, *(abs(J[k]) / norms for k in J_PIECES),
                abs(direct) / norms, err, weighted, sup, bound)
    tab.meta.update({"M": M, "C_split": C_split, "scan_constant": c_scan, "low_modes": times.low_modes,
                     "period": P, "resonant": resonant})
    return tab
