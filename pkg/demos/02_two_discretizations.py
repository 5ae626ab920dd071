# %% [markdown]
# # Two ways to discretize the chain
#
# A stage of length h can move the state with the linear step Id + h q or
# with the exact exponential exp(h q). The matrices differ by O(h^2) per
# stage. Accumulated over 1/h stages, that gives values that differ by O(h).

# %%
import numpy as np

from stagegames import (RandomGameSpec, SweepSpec, WeightFunction, fit_slope, random_game, run_sweep,
                        scheme_gap, scheme_gap_bound, solve_duration_value, uniform_partition)

game = random_game(RandomGameSpec(seed=42, S=3, m=2, n=2))
hs = np.array([1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
gaps = np.array([scheme_gap(game, h) for h in hs])
for h, gap in zip(hs, gaps):
    print(f"h={h:<6} gap={gap:.3e}  gap/h^2={gap / h**2:.3f}  remainder bound={scheme_gap_bound(game, h):.3e}")
print("slope: %.3f" % fit_slope(hs, gaps))

# %% [markdown]
# Per-stage differences add up to a first-order difference in values (finite horizon 2, uniform weight):

# %%
k = WeightFunction.uniform(2.0)
for h in (0.2, 0.1, 0.05, 0.025):
    part = uniform_partition(h, 2.0)
    a = solve_duration_value(game, part, k, "linear").values[0]
    b = solve_duration_value(game, part, k, "exponential").values[0]
    print(f"h={h:<6} |v_linear(0) - v_exp(0)| = {np.abs(a - b).max():.3e}")

# %% [markdown]
# The same comparison as a sweep over several random games, written as CSV:

# %%
spec = SweepSpec.from_dict({"experiment": "model-equivalence",
                            "games": [{"seed": s, "S": 3} for s in range(4)],
                            "h_list": [0.2, 0.1, 0.05, 0.025], "k": "unif:2"})
report = run_sweep(spec)
for row in report.rows:
    print(row["game"][:24], row["h"], "%.3e" % row["metric"], "slope %.3f" % row["slope"])
