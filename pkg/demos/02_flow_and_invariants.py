"""Small-data flow: the stepper, Picard iteration and the conserved quantities."""
import numpy as np

from qdnls.dynamics import energy, mass, picard_solve, small_data, step_evolve, triple_distance
from qdnls.spectral import FrequencyLattice

coeffs = (1, 2, 3)
lat = FrequencyLattice(2, 12)
data = small_data(lat, np.random.default_rng(7), size=1e-2, s=1.0)

sol = step_evolve(data, coeffs, 0.5, 1e-3)
first, last = sol.state_at(0), sol.state_at(sol.n - 1)
print(f"mass   {mass(first):.12e} -> {mass(last):.12e}")
print(f"energy {energy(first, coeffs):.12e} -> {energy(last, coeffs):.12e}")

# %% The mild form, solved by contraction, agrees with the time stepper.
pic, rep = picard_solve(data, coeffs, 0.5, tol=1e-11, dt=1e-3, quadrature="quartic")
print("Picard differences:", ", ".join(f"{x:.1e}" for x in rep.differences))
print(f"distance to stepper {triple_distance(pic, sol):.2e}, residual {rep.final_residual:.2e}")

# %% Growing the data breaks the contraction.
try:
    picard_solve(small_data(lat, np.random.default_rng(7), size=20.0), coeffs, 0.5, dt=1e-2, max_iter=20)
except Exception as exc:  # NonConvergenceError
    print("large data:", exc)
