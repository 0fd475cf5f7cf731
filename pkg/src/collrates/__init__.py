"""Rate coefficients for rotationally inelastic collisions of an asymmetric
top with a linear rotor, plus tools for comparing rate databases."""

from .aggregate import (EffectiveRateTable, ThermalRateTable, average_with_weights, effective_rates,
                        partition_function, thermal_rates)
from .compare import DalitzPoint, dalitz, factor_stats, match_tables, percent_difference, scaling_ratios
from .config import PhysicalConstants, PipelineConfig
from .ratecalc import (IntegrandCurve, RateTable, TransitionContext, build_integrand, integrate_rate,
                       mean_speed, rate_table, transition_context)
from .states import (AsymTopState, LevelList, LinearRotorState, asym_top_levels, boltzmann_populations,
                     classify_symmetry, linear_rotor_levels)
from .xsec import CrossSectionTable, SymmetrizedXsec, TransitionKey, pair_inventory, symmetrize

__version__ = "0.1.0"

__all__ = [
    "AsymTopState",
    "CrossSectionTable",
    "DalitzPoint",
    "EffectiveRateTable",
    "IntegrandCurve",
    "LevelList",
    "LinearRotorState",
    "PhysicalConstants",
    "PipelineConfig",
    "RateTable",
    "SymmetrizedXsec",
    "ThermalRateTable",
    "TransitionContext",
    "TransitionKey",
    "asym_top_levels",
    "average_with_weights",
    "boltzmann_populations",
    "build_integrand",
    "classify_symmetry",
    "dalitz",
    "effective_rates",
    "factor_stats",
    "integrate_rate",
    "linear_rotor_levels",
    "match_tables",
    "mean_speed",
    "pair_inventory",
    "partition_function",
    "percent_difference",
    "rate_table",
    "scaling_ratios",
    "symmetrize",
    "thermal_rates",
    "transition_context",
]
