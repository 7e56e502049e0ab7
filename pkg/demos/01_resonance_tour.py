"""Which dispersion triples are resonant, and where the resonance lives.

Run with ``python demos/01_resonance_tour.py``.
"""
from fractions import Fraction

from qdnls.resonance import classify, resonance_value, scan_min_ratio

# Three coefficient triples: a resonant one, a same-sign nonresonant one and
# a mixed-sign one that is only High-Low nonresonant.
for triple in [(1, 1, -1), (1, 2, 3), (Fraction(1, 2), Fraction(-1, 3), 2)]:
    c = classify(*triple)
    print(f"{str(triple):>28}  HH-nonres={c.hh_nonresonant!s:5}  HL-nonres={c.hl_nonresonant!s:5}"
          f"  sigma={c.sigma}  period={c.period:.4f}")

# %% The resonant triple has an exact witness: h vanishes on it.
res = scan_min_ratio((1, 1, -1), 2, 2)
print("\n(1,1,-1) witness", res.witness, "h =", resonance_value((1, 1, -1), res.witness))

# %% For nonresonant triples |h| / max|xi|^2 stays bounded below as the lattice grows.
for sig in [(1, -2, -3), (1, 1, 1)]:
    row = {K: scan_min_ratio(sig, K, 2).min_ratio for K in (2, 4, 8, 16)}
    print(sig, "  ".join(f"K={K}: {v}" for K, v in row.items()))
