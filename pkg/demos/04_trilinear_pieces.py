"""The modulation split of the trilinear integral, nonresonant against resonant."""
from qdnls.estimates import trilinear_J

tab = trilinear_J(8, 8, 2, (1, -2, -3), trials=5, seed=3, d=3)
print("nonresonant (1,-2,-3): M =", tab.meta["M"])
for name in ("J1", "J2", "J31", "J32", "J33", "direct"):
    col = tab.column(f"{name}_over_norms")
    print(f"  {name:>6}  max |.| / norms = {max(abs(x) for x in col):.3e}")
print("  identity error", max(tab.column("identity_error")))

# %% With (1,1,-1) the all-low-modulation piece survives on the witness triple.
demo = trilinear_J(1, 1, 2, (1, 1, -1), mode="resonant-demo", data="witness", trials=1)
print("resonant (1,1,-1): |J1| / norms =", f"{abs(demo.column('J1_over_norms')[0]):.4f}")
