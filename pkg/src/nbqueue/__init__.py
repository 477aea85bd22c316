"""
Stationary analysis of a slotted queue with overdispersed (negative binomial) arrivals.

Exact engines (Spitzer series, Pollaczek contour integrals, root factorisation),
heavy-traffic approximations (classical and saddle-point corrected), reference
oracles (truncated Markov chain, Monte Carlo) and a reporting CLI.
"""

from .asymptotics import (
    GaussMoments,
    HedgeParams,
    classical_approx,
    gauss_max_moments,
    gauss_series_oracle,
    hedge_from_regime,
    robust_approx,
    robust_hedge,
)
from .errors import ConvergenceError, ModelError
from .exact import pollaczek_metrics, roots_metrics, spitzer_metrics, spitzer_terms
from .metrics import METHODS, StationaryMetrics
from .model import (
    ArrivalModel,
    QueueInstance,
    RegimePoint,
    SaddleData,
    from_mean_variance,
    log_pmf,
    pgf,
    pmf,
    regime_instance,
    saddle_data,
)
from .oracles import MarkovConfig, SimConfig, markov_stationary, simulate
from .roots import RootSet, count_zeros, find_roots_bl, find_roots_fixed_point

__version__ = "0.1.0"

__all__ = [
    "ArrivalModel", "QueueInstance", "RegimePoint", "SaddleData", "from_mean_variance",
    "pgf", "pmf", "log_pmf", "regime_instance", "saddle_data",
    "StationaryMetrics", "METHODS", "ModelError", "ConvergenceError",
    "spitzer_metrics", "spitzer_terms", "pollaczek_metrics", "roots_metrics",
    "RootSet", "find_roots_fixed_point", "find_roots_bl", "count_zeros",
    "GaussMoments", "HedgeParams", "gauss_max_moments", "gauss_series_oracle",
    "classical_approx", "robust_approx", "robust_hedge", "hedge_from_regime",
    "MarkovConfig", "SimConfig", "markov_stationary", "simulate",
]
