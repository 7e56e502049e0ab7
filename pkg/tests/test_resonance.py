"""Coefficient classification and exhaustive resonance scans."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_min_ratio
from qdnls.errors import CostGuardError, IrrationalRatioError
from qdnls.resonance import (
    ball_points,
    classify,
    common_sigma,
    hh_value,
    hl_value,
    resonance_value,
    scan_min_ratio,
    sigma_product,
    to_rational,
)

nonzero = st.fractions(min_value=-20, max_value=20, max_denominator=12).filter(lambda x: x != 0)


class TestArithmetic:
    @pytest.mark.parametrize("text,want", [("3", Fraction(3)), ("-2/6", Fraction(-1, 3)), (" 5/4 ", Fraction(5, 4))])
    def test_to_rational(self, text, want):
        assert to_rational(text) == want

    def test_floats_refused(self):
        with pytest.raises(TypeError):
            to_rational(0.5)

    def test_hh_hl_values(self):
        assert hh_value(1, 2, 3) == Fraction(1 * 2 * 3) * (Fraction(1) - Fraction(1, 2) - Fraction(1, 3))
        assert hl_value(1, 2, 3) == (1 - 2) * (2 + 3) * (3 - 1)

    def test_sigma_product_matches_hh(self):
        for a, b, c in [(1, 2, 3), (2, -1, 5), (Fraction(1, 2), 3, 4)]:
            assert sigma_product(a, -b, -c) == hh_value(a, b, c)

    @pytest.mark.parametrize("vals,sig", [((1, 2, 3), 1), ((Fraction(1, 2), 1, Fraction(3, 2)), Fraction(1, 2)),
                                          ((2, 4, -6), 2)])
    def test_common_sigma(self, vals, sig):
        s = common_sigma(vals)
        assert s == sig
        assert all((Fraction(v) / s).denominator == 1 for v in vals)

    @settings(max_examples=200)
    @given(nonzero, nonzero, nonzero)
    def test_hh_implies_hl(self, a, b, c):
        t = classify(a, b, c)
        if t.hh_nonresonant:
            assert t.hl_nonresonant


class TestClassify:
    def test_exact(self):
        t = classify(1, 2, 3)
        assert t.exact and t.hh_nonresonant and t.same_sign
        assert t.sigma == 1 and t.m == (1, 2, 3)
        assert math.isclose(t.period, 2 * math.pi)

    def test_strings(self):
        t = classify("1/2", "1", "3/2")
        assert t.sigma == Fraction(1, 2) and t.m == (1, 2, 3)

    def test_floats_have_no_period(self):
        t = classify(1.0, math.sqrt(2), 3.0)
        assert not t.exact and t.period is None
        with pytest.raises(IrrationalRatioError):
            t.require_period()

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            classify(1, 0, 2)


class TestScan:
    def test_resonant_witness(self):
        r = scan_min_ratio((1, 1, -1), 2, 2)
        assert r.min_ratio == 0
        assert r.witness == ((1, 0), (0, 1), (-1, -1))
        assert resonance_value((1, 1, -1), r.witness) == 0

    @pytest.mark.parametrize("sig", [(1, 1, 1), (1, -2, -3), (2, 3, -1), (1, 1, -1)])
    @pytest.mark.parametrize("K,d", [(2, 1), (3, 2), (2, 3)])
    def test_against_brute_force(self, sig, K, d):
        assert scan_min_ratio(sig, K, d).min_ratio == brute_min_ratio(sig, K, d)

    def test_witness_attains_minimum(self):
        r = scan_min_ratio((1, -2, -3), 4, 2)
        h = abs(resonance_value((1, -2, -3), r.witness))
        mx = max(sum(v * v for v in x) for x in r.witness)
        assert Fraction(h, mx) == r.min_ratio
        assert all(any(v) for v in r.witness)

    def test_rational_coefficients(self):
        r = scan_min_ratio(("1/2", "1/2", "1/2"), 3, 2)
        assert r.min_ratio == Fraction(3, 4)

    def test_cost_guard(self):
        with pytest.raises(CostGuardError):
            scan_min_ratio((1, 1, 1), 8, 3, max_pairs=1000)

    def test_ball_points(self):
        pts = ball_points(2, 2)
        assert len(pts) == 13
        assert np.all(np.sum(pts**2, axis=1) <= 4)

    def test_resonance_value_requires_closure(self):
        with pytest.raises(ValueError):
            resonance_value((1, 1, 1), ((1,), (1,), (1,)))
