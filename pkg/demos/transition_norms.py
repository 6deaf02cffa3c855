"""Print the coupled-error transition norm for every strategy/topology pair.

||T|| < 1 is the contraction certificate for the network-deviation dynamics;
the closer to 1, the slower consensus information spreads. Two structural
facts show up immediately in the table:

  * ed and extra build different recursions but identical transition blocks,
    so their columns match to machine precision;
  * the three tracking variants also share one transition, whose blocks are
    defective (Jordan) at every eigenvalue.

Even-K rings put a mixing eigenvalue at -1/3, which parks an ed/extra factor
eigenvalue exactly on the unit circle: those entries print 1.000000 and are
marginal, not contracting. Odd rings and every other topology stay below 1.
"""

import numpy as np

from saddlemesh import build_mixing, build_strategy, build_transition

KINDS = ("ed", "extra", "atc_gt", "semi_atc_gt", "non_atc_gt")

for K in (5, 8, 16):
    print(f"\nK = {K}")
    print(f"{'topology':<20}" + "".join(f"{k:>13}" for k in KINDS))
    for topo in ("ring", "line", "complete", "metropolis_random"):
        mixing = build_mixing(topo, K, seed=11)
        cells = []
        for kind in KINDS:
            fact = build_transition(build_strategy(kind, mixing))
            cells.append(f"{fact.T_norm:>13.6f}")
        print(f"{topo:<20}" + "".join(cells))

print("\nlambda_mix (second-largest |eigenvalue| of the mixing matrix) for scale:")
for topo in ("ring", "line", "complete", "metropolis_random"):
    lams = [np.sort(np.abs(build_mixing(topo, K, seed=11).eigenvalues))[-2]
            for K in (5, 8, 16)]
    print(f"  {topo:<20}" + "".join(f"{l:>10.4f}" for l in lams))
