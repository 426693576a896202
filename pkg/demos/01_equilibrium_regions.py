"""Where monotone equilibria exist, and how many there are.

Two linear substitutes games with standard normal types and a Gaussian copula.
In the first, player 2's action does not enter player 1's payoff at x = (1, 0),
and player 1's best response loses monotonicity once types are strongly
correlated. In the second, a symmetric game at x = (1, 1), a single symmetric
equilibrium splits into three as the correlation grows.
"""

import numpy as np

from bingames.equilibrium import region_scan, solve_mpse
from bingames.reference import RHO_MONOTONE, RHO_MULTIPLE, example_case1, example_case2


def show(label, scan, what):
    for lo, hi, before, after in scan.boundaries(what):
        print(f"  {label}: changes from {before} to {after} between rho={lo:.3f} and rho={hi:.3f}")


scan1 = region_scan(example_case1, {"rho": np.linspace(0.70, 0.85, 31)})
print("case 1, monotone best responses")
show("all players monotone", scan1, "monotone")
print(f"  closed-form boundary: {RHO_MONOTONE:.6f}")

scan2 = region_scan(example_case2, {"rho": np.linspace(0.0, 0.5, 51)})
print("\ncase 2, number of equilibria")
show("count", scan2, "count")
print(f"  closed-form boundary: {RHO_MULTIPLE:.6f}")

g, x = example_case2(0.5)
eq = solve_mpse(g, x)
print(f"\ncase 2 at rho = 0.5: {len(eq)} equilibria")
for prof, res in zip(eq.equilibria, eq.residuals):
    alpha = g.marginals[0].cdf(prof.array[0]), g.marginals[1].cdf(prof.array[1])
    print(f"  thresholds {np.round(prof.array, 6)}, entry probabilities {np.round(alpha, 4)}, "
          f"residual {res:.1e}")
