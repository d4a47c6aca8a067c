"""Monte Carlo limit-theorem experiments and the Hermite-type oracle."""
from .stats import ks_distance, ks_critical, moments
from .oracle import HermiteOracle, sample_hermite_oracle
from .experiments import (ExperimentConfig, ExperimentReport, WindowStats, run_clt_experiment,
                          run_fgn_experiment, run_random_volatility_experiment,
                          run_rank_m_experiment, limit_density, auto_gamma, rncond_exponent)

__all__ = ["ks_distance", "ks_critical", "moments", "HermiteOracle", "sample_hermite_oracle",
           "ExperimentConfig", "ExperimentReport", "WindowStats", "run_clt_experiment",
           "run_fgn_experiment", "run_random_volatility_experiment", "run_rank_m_experiment",
           "limit_density", "auto_gamma", "rncond_exponent"]
