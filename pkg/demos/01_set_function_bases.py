"""A tour of the three set-function bases and the transforms between them.

A cooperative game on n features assigns a value to every coalition.  The
same game can be written as raw values (capacity basis), as Moebius
coefficients (how much each coalition adds beyond its sub-coalitions), or as
Shapley interaction indices (average marginal contributions).  This script
walks a small worked example through all three and checks the round trips.
"""

import numpy as np

from shapreg import (
    Basis,
    SetFunction,
    capacity_from_mobius,
    choquet_mobius,
    enumerate_coalitions,
    mobius_from_capacity,
    mobius_from_shapley,
    shapley_from_mobius,
    truncate_k_additive,
)
from shapreg.games import indices_of

rng = np.random.default_rng(0)

# --- a tiny 2-feature game, by hand -----------------------------------------
# Moebius mass 0.5 on {0}, 0.3 on {1}, 0.2 on the pair: the pair is worth
# more together than its parts, i.e. the features are synergistic.
m = SetFunction(n=2, k=2, basis=Basis.MOBIUS, values=np.array([0.5, 0.3, 0.2]))

mu = capacity_from_mobius(m)
print("game values:", {indices_of(c): round(float(v), 3) for c, v in zip(mu.coalitions(), mu.values)})

indices = shapley_from_mobius(m)
print("interaction indices:", indices.values, " (singletons sum to v(F) =", mu.values[-1], ")")

x = np.array([0.4, 0.8])
print("Choquet integral at", x, "=", choquet_mobius(m, x))
print()

# --- round trips on a random 6-feature game ----------------------------------
n = 6
game = SetFunction(n=n, k=n, basis=Basis.CAPACITY,
                   values=rng.normal(size=len(enumerate_coalitions(n, n))))
back = capacity_from_mobius(mobius_from_capacity(game))
print(f"capacity -> Moebius -> capacity, max error: {np.abs(back.values - game.values).max():.2e}")

m_full = mobius_from_capacity(game)
m_2add = truncate_k_additive(m_full, 2)
print(f"2-additive truncation keeps {m_2add.values.size} of {m_full.values.size} coefficients")

idx = shapley_from_mobius(m_2add)
m_back = mobius_from_shapley(idx)
print(f"Moebius -> Shapley -> Moebius, max error: {np.abs(m_back.values - m_2add.values).max():.2e}")
print(f"efficiency: sum of singleton indices {idx.values[:n].sum():+.6f} "
      f"= total Moebius mass {m_2add.values.sum():+.6f}")
