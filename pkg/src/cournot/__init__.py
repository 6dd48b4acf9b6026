"""Social optima, Cournot equilibria, monopoly outputs and efficiency bounds
for single-good oligopolies with convex inverse demand and convex costs."""

from .catalog import CatalogEntry, example, random_instance, theorem1_tight
from .cost import CostFunction
from .demand import (AffineDemand, InverseDemand, LogDemand, PiecewiseLinearDemand, PowerDemand,
                     ShiftedPowerDemand, demand_from_dict)
from .efficiency import (EfficiencyReport, Inapplicable, analyze, beta, bound_f, bound_g,
                         bound_mono, bound_mu, bound_st, bound_st_mono, compute_s_t, curvature,
                         gamma, linearize_costs, p0_transform, phi)
from .errors import CournotError
from .model import (MarketInstance, check_assumptions, instance_from_dict, instance_from_json,
                    profit, welfare)
from .solver import (SolveResult, aggregate_cost, best_response, best_response_dynamics,
                     cournot_candidates, solve_cournot_candidate, solve_cournot_equilibrium,
                     solve_monopoly, solve_social_optimum, verify_equilibrium)

__version__ = "0.1.0"
