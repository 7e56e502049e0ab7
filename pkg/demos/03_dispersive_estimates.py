"""Empirical Strichartz and bilinear ratios on small lattices."""
from qdnls.estimates import bilinear_ratio, fit_delta, strichartz_ratio, strichartz_slope

# %% L^4 Strichartz in d = 3: sup ratio against N, slope compared with d/4 - 1/2.
tabs = [strichartz_ratio(N, 4, 1, d=3, trials=10, seed=1) for N in (4, 8, 16)]
for t in tabs:
    print(f"N={t.column('N')[0]:>3}  sup ratio {max(t.column('value')):.4f}")
print(f"fitted slope {strichartz_slope(tabs):.3f}  (reference 0.25)")

# %% High x high -> low: the output in a ball of radius L decays as H grows.
tabs = [bilinear_ratio(H, 4, "HHL", 1, 1, d=3, trials=10, seed=1) for H in (16, 32, 64)]
for t in tabs:
    print(f"H={t.column('H')[0]:>3}  sup ratio {max(t.column('value')):.5f}")
print(f"fitted delta {fit_delta(tabs):.2f}")
