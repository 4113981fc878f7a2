"""Estimate periods and unit-circle eigenvalues of hidden dynamical systems from noisy bandit rewards."""
from .eigen import EigenConfig, EigenEstimate, estimate_eigen_map, reconstruct_unit_eigenvalues
from .envs import CircleEnv, LifeGameEnv, LinearSystemEnv, NoiseModel, load_lifegame_fixture, load_matrix
from .errors import BudgetError, ConfigError, DataError, DomainError, DynspecError, EnvironmentExhausted
from .period import PeriodConfig, PeriodEstimate, estimate_period, is_aliquot_nearly_period

__all__ = [
    "BudgetError",
    "CircleEnv",
    "ConfigError",
    "DataError",
    "DomainError",
    "DynspecError",
    "EigenConfig",
    "EigenEstimate",
    "EnvironmentExhausted",
    "LifeGameEnv",
    "LinearSystemEnv",
    "NoiseModel",
    "PeriodConfig",
    "PeriodEstimate",
    "estimate_eigen_map",
    "estimate_period",
    "is_aliquot_nearly_period",
    "load_lifegame_fixture",
    "load_matrix",
    "reconstruct_unit_eigenvalues",
]
