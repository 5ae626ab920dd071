"""Zero-sum stochastic games with short stages.

Perfect-observation and state-blind values over arbitrary time partitions,
stationary discounted solutions, discount families, and convergence sweeps.
"""

from .errors import NumericalFailure, StageGamesError, ValidationError
from .game import (Game, Partition, TailRule, WeightFunction, as_distribution, kernel_from_matrix,
                   load_game, make_game, make_partition, parse_partition, parse_weight, save_game,
                   uniform_partition, validate_game)
from .matrix_game import MatrixGameSolution, val, val_batch, val_oracle_2x2
from .kernels import expm, scheme_gap, scheme_gap_bound, transition
from .duration import (ValueField, discounted_residual, limit_equation_residual, shapley_apply,
                       solve_discounted_fixed_point, solve_duration_value)
from .blind import (BeliefGrid, BlindValueField, belief_gradient, belief_step, blind_pde_residual,
                    make_grid, measure_lipschitz, solve_blind_value)
from .discounting import (DiscountFamily, family_equivalence_gap, product_lower_bound_gap,
                          stage_weights, weight_sum_identity_check)
from .lab import RandomGameSpec, SweepSpec, fit_slope, random_game, run_sweep

__version__ = "0.1.0"
