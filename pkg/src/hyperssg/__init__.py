"""Solver and verifier for leader-follower security games under misperception and deception."""
from .model import (DomainError, ParametricPayoff, SecurityGame, SpecError, StrategyProfile,
                    ThetaSpace, attack_value, best_response_set, follower_utility, leader_utility,
                    parametric_gradient, validate_game)
from .equilibrium import (BudgetError, EquilibriumResult, HneCertificate, brute_force_sse,
                          check_hne, check_ne, solve_dsse, solve_msse, solve_msse_milp, solve_sse)

__version__ = "0.1.0"
