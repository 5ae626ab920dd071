# %% [markdown]
# # Discount factors for stages of any length
#
# A stage of length h is discounted by alpha_h. Any family with
# alpha_h / h -> lam gives the same limit. Below, the exponential and linear
# families are compared on shrinking uniform partitions.

# %%
import math

import numpy as np

from stagegames import (DiscountFamily, family_equivalence_gap, stage_weights, uniform_partition,
                        weight_sum_identity_check)

lam = 1.0
families = {kind: DiscountFamily(kind, lam) for kind in ("exponential", "linear", "capped")}
for kind, fam in families.items():
    print(f"{kind:<12} alpha(0.1)={fam.alpha(0.1):.6f}  alpha(1e-6)/1e-6={fam.alpha(1e-6) / 1e-6:.6f}")

# %% [markdown]
# Linear weights sum to exactly 1/lam on any divergent partition (up to truncation).

# %%
for h in (1.0, 0.5, 0.1):
    print(f"h={h:<4} |sum w - 1/lam| = {weight_sum_identity_check(0.5, uniform_partition(h)):.2e}")

w = stage_weights(families["exponential"], uniform_partition(0.1), 5)
print("exponential weights:", w.round(6), " e^{-t} h:", (np.exp(-0.1 * np.arange(5)) * 0.1).round(6))

# %% [markdown]
# Worst-case difference between the two families over payoff streams bounded by h per stage:

# %%
hs = [0.2, 0.1, 0.05, 0.025, 0.0125]
gaps = [family_equivalence_gap(families["linear"], families["exponential"], uniform_partition(h))
        for h in hs]
for h, g in zip(hs, gaps):
    print(f"h={h:<7} gap={g:.5f}")
print("slope: %.3f" % np.polyfit(np.log(hs[1:]), np.log(gaps[1:]), 1)[0])
