"""Fictitious play and anticipatory fictitious play for zero-sum matrix games."""
from .dynamics import (Algorithm, BestResponses, Mode, RunTrace, Steps, TiebreakRule, run,
                       simulate, simulate_reference)
from .game import MatrixGame, Player, duality_gap, exact_value, worst_case_payoff
from .generators import (GameSpec, SpecError, cyclic_game, parse_game_spec, random_gaussian, rps,
                         rps_saferock, transitive_game)
from .population import SamplerSpec, meta_matrix, population_run, sampler_run

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "BestResponses", "GameSpec", "MatrixGame", "Mode", "Player", "RunTrace",
    "SamplerSpec", "SpecError", "Steps", "TiebreakRule", "cyclic_game", "duality_gap",
    "exact_value", "meta_matrix", "parse_game_spec", "population_run", "random_gaussian",
    "rps", "rps_saferock", "run", "sampler_run", "simulate", "simulate_reference",
    "transitive_game", "worst_case_payoff",
]
