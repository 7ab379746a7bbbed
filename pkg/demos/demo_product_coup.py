"""
Degree arithmetic: semigroup splits and product decompositions
==============================================================

Large degrees are reached by multiplying factors of two consecutive
degrees s and s+1. The arithmetic behind this (which degrees split, where
the effective bound lands) is exact integer work; the resulting geometric
decomposition is verified pointwise over F_3.
"""

from mcmforms.exact_algebra import Field, from_literal
from mcmforms.product_coup import (
    NoRepresentation,
    effective_bound_NN2,
    frobenius_split,
    verify_product_decomposition,
    verify_semigroup_bound,
)
from mcmforms.schedule import ProblemShape

# Every d >= s(s-1) splits as d = p*s + q*(s+1); below that there are gaps.
for d in (7, 6, 5):
    try:
        p, q = frobenius_split(d, 3)
        print(f"d={d}: {p}*3 + {q}*4")
    except NoRepresentation:
        print(f"d={d}: no representation (Frobenius number of {{3,4}} is 5)")

rep = verify_semigroup_bound(10, 10_000)
print(f"s=10: {len(rep['gaps_below_threshold'])} gaps below threshold"
      f" {rep['threshold']}, failures above: {len(rep['failures_at_or_above'])}")

# The headline bound compares d0*(d0+1) with N^(N^2) as exact big integers;
# N=3 is the marginal case where the integerized variant just misses.
for N in (4, 3):
    rep = effective_bound_NN2(N)
    print(f"N={N}: parity={rep['parity']}, flagged={rep['flagged']},"
          f" ok={rep['ok']}")

# Pointwise decomposition over F_3: the locus cut by a product F = f*g and
# dF splits into pieces indexed by which factors vanish.
F3 = Field(3)
factors = [[from_literal("1 * z0^1 + 1 * z1^1", 2, F3),
            from_literal("1 * z1^1 + 2 * z2^1", 2, F3)]]
rep = verify_product_decomposition(factors, ProblemShape(2, 1, 0), 3)
print(f"two lines in P^2(F_3): lhs={rep['lhs_count']} rhs={rep['rhs_count']}"
      f" pieces={rep['pieces']} ok={rep['ok']}")
