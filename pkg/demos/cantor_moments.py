"""Moments of the Cantor measure three ways: the exact recursion, iterating
the moment-matrix map, and a long chaos-game orbit."""
from fractions import Fraction

import numpy as np

from momentforge.ifs import cantor_ifs, chaos_game_moments, fixed_point_iterate, solve_equilibrium_moments
from momentforge.measures import Dirac, moment_matrix

N = 6
system = cantor_ifs()

exact = solve_equilibrium_moments(system, 2 * N)
print("exact moments:", ", ".join(str(m) for m in exact[: N + 1]))

# start from a point mass and apply M -> sum p_i A_i^* M A_i until it stops moving
start = moment_matrix(Dirac(Fraction(0)), N // 2).to_array().astype(float)
its = fixed_point_iterate(system, start, N // 2, iters=100)
print(f"fixed point after {len(its) - 1} steps, first row:", np.round(its[-1][0], 12))

res = chaos_game_moments(system, N, 10**6, np.random.default_rng(0))
for k in range(1, N + 1):
    z = (res.moments[k] - float(exact[k])) / res.stderr[k]
    print(f"k={k}  orbit {res.moments[k]:.6f} +- {res.stderr[k]:.1e}  exact {float(exact[k]):.6f}  z={z:+.2f}")
