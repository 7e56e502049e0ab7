"""Exact-rational resonance analysis for dispersion coefficient triples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from numbers import Rational

import numpy as np

from .errors import CostGuardError, IrrationalRatioError

__all__ = [
    "CoefficientTriple",
    "CostGuardError",
    "IrrationalRatioError",
    "to_rational",
    "classify",
    "hh_value",
    "hl_value",
    "sigma_product",
    "common_sigma",
    "resonance_value",
    "ScanResult",
    "scan_min_ratio",
    "ball_points",
    "DEFAULT_MAX_PAIRS",
]

DEFAULT_MAX_PAIRS = 5 * 10**8


def to_rational(x) -> Fraction:
    """Parse ``int``, ``Fraction`` or ``"p/q"`` strings exactly; floats are refused."""
    if isinstance(x, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def hh_value(a, b, c):
    """``abc(1/a - 1/b - 1/c)``; positive means High-High nonresonant."""
    return a * b * c * (1 / a - 1 / b - 1 / c)


def hl_value(a, b, c):
    """``(a-b)(b+c)(c-a)``; nonzero means High-Low nonresonant."""
    return (a - b) * (b + c) * (c - a)


def sigma_product(s1, s2, s3):
    """``s1 s2 s3 (1/s1 + 1/s2 + 1/s3)`` for a triple ``(sigma_1, sigma_2, sigma_3)``.

    Positive values are the High-High nonresonant case of the modulation
    bound; ``(alpha, -beta, -gamma)`` gives back :func:`hh_value`.
    """
    return s1 * s2 * s3 * (1 / s1 + 1 / s2 + 1 / s3)


def common_sigma(values) -> Fraction:
    """Largest positive rational ``s`` with every ``v/s`` a nonzero integer."""
    fr = [abs(Fraction(v)) for v in values]
    num = reduce(math.gcd, (f.numerator for f in fr))
    den = reduce(lambda x, y: x * y // math.gcd(x, y), (f.denominator for f in fr))
    return Fraction(num, den)


@dataclass(frozen=True)
class CoefficientTriple:
    alpha: object
    beta: object
    gamma: object
    exact: bool
    hh_nonresonant: bool
    hl_nonresonant: bool
    rational_ratio: bool
    same_sign: bool
    sigma: Fraction | None
    m: tuple | None

    @property
    def values(self) -> tuple:
        return (self.alpha, self.beta, self.gamma)

    @property
    def period(self) -> float | None:
        return None if self.sigma is None else 2 * math.pi / float(self.sigma)

    def floats(self) -> tuple[float, float, float]:
        return tuple(float(x) for x in self.values)

    def require_period(self) -> float:
        if self.period is None:
            raise IrrationalRatioError(
                "coefficient ratios are not known to be rational; period-based experiments are unavailable"
            )
        return self.period


def classify(alpha, beta, gamma) -> CoefficientTriple:
    """Classify ``(alpha, beta, gamma)``.

    Exact rationals (ints, Fractions, ``"p/q"`` strings) are classified in
    exact arithmetic and get a common period. Floats are classified in
    floating point and are treated as possibly irrational: no period.
    """
    raw = (alpha, beta, gamma)
    try:
        vals = tuple(to_rational(x) for x in raw)
        exact = True
    except TypeError:
        vals = tuple(float(x) for x in raw)
        exact = False
    if any(v == 0 for v in vals):
        raise ValueError("coefficients must be nonzero")
    a, b, c = vals
    hh = hh_value(a, b, c) > 0
    hl = hl_value(a, b, c) != 0
    same = (a > 0) == (b > 0) == (c > 0)
    if exact:
        sig = common_sigma(vals)
        m = tuple(int(v / sig) for v in vals)
    else:
        sig, m = None, None
    return CoefficientTriple(a, b, c, exact, hh, hl, exact, same, sig, m)


def resonance_value(sigmas, xis) -> Fraction:
    """``h = sum_j sigma_j |xi_j|^2`` for a frequency triple summing to zero."""
    s = [to_rational(x) for x in sigmas]
    v = [tuple(int(c) for c in xi) for xi in xis]
    if len(s) != 3 or len(v) != 3:
        raise ValueError("need three coefficients and three frequencies")
    if any(sum(col) != 0 for col in zip(*v)):
        raise ValueError("frequencies must sum to zero")
    return sum((sj * sum(c * c for c in xj) for sj, xj in zip(s, v)), Fraction(0))


@lru_cache(maxsize=None)
def ball_points(K: int, d: int) -> np.ndarray:
    """Integer points with ``|xi| <= K`` in lexicographic order, shape ``(P, d)``."""
    axis = np.arange(-K, K + 1)
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = np.sum(pts**2, axis=1) <= K * K
    out = pts[keep].astype(np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScanResult:
    sigmas: tuple
    K: int
    d: int
    min_ratio: Fraction
    witness: tuple
    pairs: int


def _better(n1, d1, key1, n2, d2, key2) -> bool:
    """Exact comparison of candidates ``(n/d, key)``: smaller ratio wins, then larger key."""
    lhs, rhs = n1 * d2, n2 * d1
    if lhs != rhs:
        return lhs < rhs
    return key1 > key2


def scan_min_ratio(sigmas, K: int, d: int, max_pairs: int = DEFAULT_MAX_PAIRS) -> ScanResult:
    """Exhaustive minimum of ``|h| / max_j |xi_j|^2`` over lattice triples.

    Triples satisfy ``xi_1 + xi_2 + xi_3 = 0`` and ``0 < max_j |xi_j| <= K``.
    Among minimizers the witness prefers triples with no zero frequency
    (a zero mode is constant in space and carries no derivative coupling),
    then the smallest ``max_j |xi_j|^2``, then the lexicographically largest
    ``(xi_1, xi_2)``.
    All comparisons are in integer arithmetic.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 1 <= d <= 4:
        raise ValueError("d must be in 1..4")
    s = [to_rational(x) for x in sigmas]
    if len(s) != 3 or any(x == 0 for x in s):
        raise ValueError("need three nonzero coefficients")
    pts = ball_points(K, d)
    P = len(pts)
    if P * P > max_pairs:
        raise CostGuardError(f"scan needs {P * P} pairs, budget is {max_pairs}")
    den = reduce(lambda x, y: x * y // math.gcd(x, y), (x.denominator for x in s))
    w = [int(x * den) for x in s]
    sq = np.sum(pts * pts, axis=1)
    K2 = K * K
    best = None  # (num, den, key, (i, j))
    for i in range(P):
        xi3 = -(pts[i][None, :] + pts)
        sq3 = np.sum(xi3 * xi3, axis=1)
        ok = sq3 <= K2
        mx = np.maximum(np.maximum(sq[i], sq), sq3)
        ok &= mx > 0
        if not ok.any():
            continue
        idx = np.nonzero(ok)[0]
        h = np.abs(w[0] * sq[i] + w[1] * sq[idx] + w[2] * sq3[idx])
        mxi = mx[idx]
        # exact argmin of h / mx: compare against the float candidate by cross products
        j0 = int(np.argmin(h / mxi))
        hn, hd = int(h[j0]), int(mxi[j0])
        tie = (h * hd == hn * mxi)
        smaller = h * hd < hn * mxi
        if smaller.any():  # float argmin missed an exact smaller value
            cand = np.nonzero(smaller)[0]
            j0 = int(cand[np.argmin(h[cand] / mxi[cand])])
            hn, hd = int(h[j0]), int(mxi[j0])
            tie = (h * hd == hn * mxi)
        for j in np.nonzero(tie)[0]:
            jj = int(idx[j])
            nonzero = bool(sq[i] > 0 and sq[jj] > 0 and sq3[jj] > 0)
            key = (nonzero, -int(mxi[j]), tuple(int(c) for c in pts[i]), tuple(int(c) for c in pts[jj]))
            if best is None or _better(int(h[j]), int(mxi[j]), key, best[0], best[1], best[2]):
                best = (int(h[j]), int(mxi[j]), key, (i, jj))
    if best is None:
        raise ValueError("no admissible triples")
    i, j = best[3]
    x1, x2 = pts[i], pts[j]
    witness = (tuple(int(c) for c in x1), tuple(int(c) for c in x2), tuple(int(c) for c in -(x1 + x2)))
    ratio = Fraction(best[0], best[1] * den)
    return ScanResult(tuple(s), K, d, ratio, witness, P * P)
