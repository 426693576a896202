"""Which choice tables can the model rationalize?

Three tables: one generated by a game with a unique equilibrium, one mixing
two populations with different type dependence, and one produced by switching
between two equilibria as an unrecorded covariate moves. The ``ci`` check asks
the narrower question of whether types could be independent; it is reported
separately because all three tables come from correlated types.
"""

import numpy as np

from bingames.game_core import GridDesign
from bingames.rationalize import ChoiceData, run_checks
from bingames.reference import linear_index_game
from bingames.simulate import heterogeneity_fixture, population_table, switching_fixture

ax = np.linspace(-1, 1, 4)
design = GridDesign.product(ax, ax, [0.0, 1.0], continuous=False)
game = linear_index_game([0.1, -0.2], [1.0, 1.2], [[0, -0.6], [0, -0.4]], 0.3, design=design)

tables = {
    "single equilibrium": ChoiceData.from_population(population_table(game)),
    "mixed populations": ChoiceData.from_population(heterogeneity_fixture()),
    "equilibrium switching": ChoiceData.from_population(switching_fixture()[0]),
}
for label, data in tables.items():
    rep = run_checks(data)
    ok = all(c.verdict in ("pass", "skipped") for n, c in rep.checks.items() if n != "ci")
    print(f"{label}: {'rationalizable' if ok else 'rejected'}, "
          f"independent types {'not ' if rep['ci'].verdict == 'fail' else ''}supported")
    for name, c in rep.checks.items():
        print(f"  {name:<13} {c.verdict:<12} statistic {c.statistic:.2e}")
    print()
