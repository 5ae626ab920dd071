# %% [markdown]
# # Short stages converge to the continuous-time game
#
# A two-state "weather" game is played in stages of length h. Payoffs are
# weighted by k(t) = e^{-t}. As h shrinks, the stage-game value at time 0
# approaches the solution of the stationary discounted equation.

# %%
from pathlib import Path

import numpy as np

from stagegames import (WeightFunction, fit_slope, load_game, solve_discounted_fixed_point,
                        solve_duration_value, uniform_partition, val)

DATA = Path(__file__).parent / "data"
game = load_game(DATA / "weather.json")
print("states:", game.states, " q_max:", game.q_max, " |g|:", game.g_norm)

# %% [markdown]
# Each stage is a matrix game. In the calm state with a zero continuation, it is just:

# %%
calm = game.payoff[:, :, 0]
sol = val(calm)
print(calm)
print("value %.4f  row strategy %s  column strategy %s" % (sol.value, sol.x_opt.round(4), sol.y_opt.round(4)))

# %%
lam = 1.0
k = WeightFunction.exponential(lam)
v_star = solve_discounted_fixed_point(game, lam)
print("stationary solution:", v_star.round(6))

hs = np.array([0.2, 0.1, 0.05, 0.025, 0.0125])
errors = []
for h in hs:
    field = solve_duration_value(game, uniform_partition(h), k)
    errors.append(np.abs(field.values[0] - v_star).max())
    print(f"h={h:<7} stages={field.stages:<5} v(0)={field.values[0].round(6)}  error={errors[-1]:.2e}")

print("log-log slope: %.3f" % fit_slope(hs, errors))

# %% [markdown]
# The optimal stage strategies are Markov: they depend only on the stage and the state.

# %%
field = solve_duration_value(game, uniform_partition(0.1), k, strategies=True)
X, Y = field.strategies
for n in (0, 10, 40):
    print(f"t={field.times[n]:.1f}  calm: x={X[n, 0].round(3)} y={Y[n, 0].round(3)}")
