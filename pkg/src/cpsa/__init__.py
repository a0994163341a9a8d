"""Cooperative pilot-spoofing attacks on ZF-precoded multiuser MIMO downlinks.

Closed-form rate analysis, the attacker's optimal power split, and a seeded
Monte Carlo engine that checks the analysis trial by trial.
"""

from .airlink import AttackAllocation, ChannelRealization, pilot_matrix
from .attack_opt import SolverSettings, SolveResult, optimize_attack, reduced_kkt_solve
from .estimation import lmmse_stats, lmmse_stats_all
from .kernels import BACKEND
from .montecarlo import (SCHEMES, TrialPlan, closed_form_placement_average, draw_placement,
                         run_placement_average, run_scheme, trial_seed)
from .precoding import MomentEstimates, empirical_sinr, zf_precoder
from .rate import RateCoefficients, RateReport, rate_coefficients, sum_rate, xi
from .scenario import LargeScaleProfile, PathLossModel, SystemParams, build_profile

__version__ = "0.1.0"

__all__ = [
    "AttackAllocation", "ChannelRealization", "pilot_matrix",
    "SolverSettings", "SolveResult", "optimize_attack", "reduced_kkt_solve",
    "lmmse_stats", "lmmse_stats_all", "BACKEND",
    "SCHEMES", "TrialPlan", "closed_form_placement_average", "draw_placement",
    "run_placement_average", "run_scheme", "trial_seed",
    "MomentEstimates", "empirical_sinr", "zf_precoder",
    "RateCoefficients", "RateReport", "rate_coefficients", "sum_rate", "xi",
    "LargeScaleProfile", "PathLossModel", "SystemParams", "build_profile",
]
