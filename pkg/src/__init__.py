"""
Energy-Harvesting Spectrum Access - Core modules

Throughput analysis, policy optimisation and Monte Carlo simulation of an
energy-harvesting secondary user sharing a slotted channel with a primary user.
"""

from .errors import ValidationError, CapacityError, NumericalError
from .link_model import SystemParams, primary_success_prob, secondary_success_prob
from .energy_chain import (
    PoissonArrivals, AccessPolicy, EnergyChain, poisson_pmf,
    build_transition_matrix, stationary_distribution
)
from .throughput import ThroughputReport, pu_is_stable, pu_idle_prob, energy_service_rate, su_throughput, evaluate_policy
from .optimizer import (
    OptimizationResult, enumerate_deterministic, value_iteration,
    randomized_ascent, fixed_strategy_policy, optimize
)
from .simulator import SimConfig, SimStats, simulate
from .config_manager import ConfigManager, ExperimentSpec, validate_config
from .config_handler import ConfigHandler
from .argument_parser import ArgumentParser
from .core import run_experiment, run_eval, run_optimize, run_simulate

__all__ = [
    'ValidationError',
    'CapacityError',
    'NumericalError',
    'SystemParams',
    'primary_success_prob',
    'secondary_success_prob',
    'PoissonArrivals',
    'AccessPolicy',
    'EnergyChain',
    'poisson_pmf',
    'build_transition_matrix',
    'stationary_distribution',
    'ThroughputReport',
    'pu_is_stable',
    'pu_idle_prob',
    'energy_service_rate',
    'su_throughput',
    'evaluate_policy',
    'OptimizationResult',
    'enumerate_deterministic',
    'value_iteration',
    'randomized_ascent',
    'fixed_strategy_policy',
    'optimize',
    'SimConfig',
    'SimStats',
    'simulate',
    'ConfigManager',
    'ExperimentSpec',
    'validate_config',
    'ConfigHandler',
    'ArgumentParser',
    'run_experiment',
    'run_eval',
    'run_optimize',
    'run_simulate',
]
