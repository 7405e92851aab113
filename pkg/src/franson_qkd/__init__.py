"""Entanglement-based QKD with Franson interferometers: analytic error model and Monte Carlo."""

from .channel import ChannelParams, db_to_linear, dispersion_spread
from .detection import DetectorParams, click_prob, solve_efficiency
from .errors import ConfigError, DomainError, ReconciliationError
from .montecarlo import SimulationConfig, run_session, sift, simulate_gate, simulate_session
from .profiles import BUILTIN_PROFILES, LAB_20M, SPOOL_8450M, ExperimentProfile, load_profile
from .qber_model import LinkBudget, QberBreakdown, SourceParams, p_correct, qber_breakdown, sweep_attenuation

__all__ = [
    "BUILTIN_PROFILES", "ChannelParams", "ConfigError", "DetectorParams", "DomainError",
    "ExperimentProfile", "LAB_20M", "LinkBudget", "QberBreakdown", "ReconciliationError",
    "SPOOL_8450M", "SimulationConfig", "SourceParams", "click_prob", "db_to_linear",
    "dispersion_spread", "load_profile", "p_correct", "qber_breakdown", "run_session", "sift",
    "simulate_gate", "simulate_session", "solve_efficiency", "sweep_attenuation",
]
