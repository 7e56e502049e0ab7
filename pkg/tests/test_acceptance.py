"""The twelve acceptance criteria, each at its stated size and tolerance.

The conftest summary hook prints one PASS/FAIL line per criterion using
``CRITERIA``.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import direct_convolution_vec, p_variation_subsets
from qdnls.cli import main
from qdnls.dynamics import (
    energy,
    mass,
    picard_solve,
    reduced_triple_evolve,
    single_equation_evolve,
    small_data,
    step_evolve,
    triple_distance,
)
from qdnls.estimates import bilinear_ratio, fit_delta, strichartz_ratio, strichartz_slope, trilinear_J
from qdnls.norms import hs_norm, vp_variation_norm, ys_norm
from qdnls.projections import Trajectory
from qdnls.resonance import classify, scan_min_ratio
from qdnls.spectral import FieldTriple, FrequencyLattice, free_evolution, pointwise_product

CRITERIA = {
    "test_convolution_oracle": (1, "pointwise product equals direct convolution"),
    "test_free_evolution_unitary": (2, "free evolution unitarity and group law"),
    "test_v2_dynamic_program": (3, "V^2 dynamic program and Y^0 of free evolution"),
    "test_conservation": (4, "conservation of M and H"),
    "test_picard_contraction": (5, "Picard contraction and stepper consistency"),
    "test_flow_map_lipschitz": (6, "flow-map Lipschitz ratios"),
    "test_resonance_scans": (7, "resonance scans and HH => HL"),
    "test_j_decomposition": (8, "five-piece J decomposition"),
    "test_strichartz_trend": (9, "Strichartz log-log slope"),
    "test_bilinear_trend": (10, "bilinear HHL decay"),
    "test_single_equation_reduction": (11, "single-equation reduction"),
    "test_determinism": (12, "byte-identical reruns"),
}

COEFFS = (1, 2, 3)
SEED = 20240611


@pytest.fixture(scope="module")
def conservation_setup():
    lat = FrequencyLattice(2, 16)
    data = small_data(lat, np.random.default_rng(SEED), size=1e-2, s=1.0)
    return lat, data


@pytest.fixture(scope="module")
def stepped(conservation_setup):
    _, data = conservation_setup
    t0 = time.perf_counter()
    sol = step_evolve(data, COEFFS, 1.0, 1e-3)
    return sol, time.perf_counter() - t0


def test_convolution_oracle():
    rng = np.random.default_rng(SEED)
    K = 8
    elapsed, worst = 0.0, 0.0
    for d in (1, 2):
        lat = FrequencyLattice(d, K)
        for _ in range(100):
            f, g = lat.random_field(rng), lat.random_field(rng)
            t0 = time.perf_counter()
            got = pointwise_product(f, g).coeffs[0]
            elapsed += time.perf_counter() - t0
            want = direct_convolution_vec(f.coeffs[0], g.coeffs[0], K, d)
            worst = max(worst, np.linalg.norm(got - want) / np.linalg.norm(want))
    print(f"max relative error {worst:.2e}, product time {elapsed:.3f} s")
    assert worst <= 1e-12
    assert elapsed < 5.0


def test_free_evolution_unitary():
    rng = np.random.default_rng(SEED)
    lat = FrequencyLattice(2, 8)
    worst_mod, worst_group = 0.0, 0.0
    for _ in range(100):
        f = lat.random_field(rng)
        # |sigma t| <= 1 keeps the phase rounding eps*|sigma t||k|^2 below 1e-13
        sigma, t, s = rng.uniform(-1, 1), rng.uniform(0, 0.5), rng.uniform(0, 0.5)
        ft = free_evolution(f, sigma, t)
        worst_mod = max(worst_mod, float(np.max(np.abs(np.abs(ft.coeffs) - np.abs(f.coeffs)))))
        both = free_evolution(ft, sigma, s).coeffs
        worst_group = max(worst_group, float(np.max(np.abs(both - free_evolution(f, sigma, t + s).coeffs))))
    print(f"modulus error {worst_mod:.2e}, group-law error {worst_group:.2e}")
    assert worst_mod <= 1e-13
    assert worst_group <= 1e-13


def test_v2_dynamic_program():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        c = int(rng.integers(1, 3))
        path = rng.normal(size=(n, c)) + 1j * rng.normal(size=(n, c))
        zero = bool(rng.integers(0, 2))
        dp = vp_variation_norm(path, 2.0, append_zero=zero)
        ex = p_variation_subsets(np.concatenate([path, np.zeros((1, c))]) if zero else path, 2.0)
        worst = max(worst, abs(dp - ex))
    lat = FrequencyLattice(2, 5)
    phi = lat.random_field(rng)
    tr = Trajectory.free(phi, 1.5, 24, 0.05)
    y0 = ys_norm(tr, 1.5, 0.0)
    print(f"DP vs exhaustive {worst:.2e}, Y0 - L2 = {y0 - hs_norm(phi):.2e}")
    assert worst <= 1e-12
    assert abs(y0 - hs_norm(phi)) <= 1e-12


def test_conservation(stepped):
    c = classify(*COEFFS)
    assert c.hh_nonresonant and c.same_sign
    sol, elapsed = stepped
    states = [sol.state_at(j) for j in range(0, sol.n, 50)] + [sol.state_at(sol.n - 1)]
    M = np.array([mass(st) for st in states])
    H = np.array([energy(st, COEFFS) for st in states])
    dM = float(np.max(np.abs(M - M[0])) / abs(M[0]))
    dH = float(np.max(np.abs(H - H[0])) / abs(H[0]))
    print(f"mass drift {dM:.2e}, energy drift {dH:.2e}, stepper {elapsed:.1f} s")
    assert dM <= 1e-8
    assert dH <= 1e-8
    assert elapsed < 120


def test_picard_contraction(conservation_setup, stepped):
    _, data = conservation_setup
    sol, rep = picard_solve(data, COEFFS, 1.0, tol=1e-10, dt=1e-3, quadrature="quartic")
    ref, _ = stepped
    gap = triple_distance(sol, ref)
    print(f"ratios {[round(r, 4) for r in rep.ratios]}, gap {gap:.2e}, residual {rep.final_residual:.2e}")
    assert rep.converged
    assert all(r < 0.5 for r in rep.ratios[1:])
    assert gap <= 1e-6
    assert rep.final_residual <= 1e-6


def test_flow_map_lipschitz(conservation_setup, stepped):
    lat, data = conservation_setup
    ref, _ = stepped
    eta = small_data(lat, np.random.default_rng(SEED + 1), size=1.0, s=0.0)
    ratios = []
    for delta in (1e-3, 1e-4):
        pert = FieldTriple(*(f + e * delta for f, e in zip(data, eta)))
        sol = step_evolve(pert, COEFFS, 1.0, 1e-3)
        ratios.append(triple_distance(sol, ref) / delta)
    print(f"difference / delta: {ratios}")
    assert max(ratios) <= 2 * min(ratios)


def test_resonance_scans():
    failures = []
    res = scan_min_ratio((1, 1, -1), 2, 2)
    if res.min_ratio != 0 or res.witness != ((1, 0), (0, 1), (-1, -1)):
        failures.append(f"(1,1,-1): ratio {res.min_ratio}, witness {res.witness}")
    for sig in ((1, -2, -3), (1, 1, 1)):
        vals = {K: scan_min_ratio(sig, K, 2).min_ratio for K in (4, 8, 16)}
        print(f"{sig}: " + ", ".join(f"K={K}: {v}" for K, v in vals.items()))
        if not all(v > 0 for v in vals.values()):
            failures.append(f"{sig}: nonpositive minimum {vals}")
        if len(set(vals.values())) != 1:
            failures.append(f"{sig}: minimum depends on K {vals}")
    rng = np.random.default_rng(SEED)
    exceptions = 0
    for _ in range(10_000):
        a, b, c = (Fraction(int(rng.integers(1, 50)) * int(rng.choice([-1, 1])), int(rng.integers(1, 50)))
                   for _ in range(3))
        ct = classify(a, b, c)
        exceptions += ct.hh_nonresonant and not ct.hl_nonresonant
    if exceptions:
        failures.append(f"HH => HL failed on {exceptions} triples")
    assert not failures, "; ".join(failures)


def test_j_decomposition():
    tab = trilinear_J(8, 8, 2, (1, -2, -3), trials=20, seed=SEED, d=3)
    extra = trilinear_J(4, 2, 2, (1, 2, 3), trials=5, seed=SEED, d=2)
    demo = trilinear_J(1, 1, 2, (1, 1, -1), mode="resonant-demo", data="witness", trials=3, seed=SEED)
    ident = max(max(t.column("identity_error")) for t in (tab, extra, demo))
    j1 = max(abs(x) for x in tab.column("J1_over_norms"))
    j1_demo = min(abs(x) for x in demo.column("J1_over_norms"))
    print(f"identity {ident:.2e}, nonresonant |J1| {j1:.2e}, resonant |J1| {j1_demo:.3e}")
    assert ident <= 1e-10
    assert j1 <= 1e-10
    assert j1_demo >= 1e-3


def test_strichartz_trend():
    t0 = time.perf_counter()
    tabs = [strichartz_ratio(N, 4, 1, d=3, trials=50, seed=SEED) for N in (4, 8, 16, 32)]
    elapsed = time.perf_counter() - t0
    slope = strichartz_slope(tabs)
    print(f"slope {slope:.4f}, {elapsed:.1f} s")
    assert slope <= 3 / 4 - 1 / 2 + 0.15
    assert elapsed < 300


def test_bilinear_trend():
    tabs = [bilinear_ratio(H, 4, "HHL", 1, 1, d=3, trials=50, seed=SEED) for H in (16, 32, 64)]
    sups = [max(t.column("value")) for t in tabs]
    delta = fit_delta(tabs)
    print(f"sup ratios {sups}, delta {delta:.3f}")
    assert all(b <= 1.1 * a for a, b in zip(sups, sups[1:]))
    assert delta >= 0.05


def test_single_equation_reduction():
    rng = np.random.default_rng(SEED)
    lat = FrequencyLattice(3, 8)
    u0 = lat.random_field(rng, 1, np.exp(-lat.xi_sq / 8))
    u0 = u0 * (0.05 / hs_norm(u0))
    a = single_equation_evolve(u0, 0, 0.5, 1e-2)
    b = reduced_triple_evolve(u0, 0, 0.5, 1e-2)
    err = float(np.max(np.abs(a.data - b.data)))
    print(f"max coefficient difference {err:.2e}")
    assert err <= 1e-10


def test_determinism(tmp_path):
    configs = {
        "strichartz": "N = 2, 4\nd = 2\np = 4\ntrials = 4\n",
        "bilinear": "H = 16\nL = 4\ncase = HHL\nsigma1 = 1\nsigma2 = 1\nd = 2\ntrials = 4\n",
        "trilinear": "N3 = 4,4,2\nd = 2\ntrials = 3\n",
        "resonance-scan": "alpha = 1\nbeta = -2\ngamma = -3\nd = 2\nK = 4\n",
        "simulate": "K = 4\nd = 2\nT = 0.05\ndt = 1e-2\n",
    }
    for exp, text in configs.items():
        cfg = tmp_path / f"{exp}.cfg"
        cfg.write_text(text)
        for run in ("a", "b"):
            assert main([exp, "--config", str(cfg), "--out", str(tmp_path / exp / run)]) == 0
        names = sorted(p.name for p in (tmp_path / exp / "a").glob("*.csv"))
        assert names
        for name in names:
            assert (tmp_path / exp / "a" / name).read_bytes() == (tmp_path / exp / "b" / name).read_bytes(), name
