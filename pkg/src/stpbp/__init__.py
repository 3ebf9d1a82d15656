"""Saturated total-population-dependent branching processes for content
propagation: simulation, TeF estimation, closed-form theory and validation."""
from .abstract import OffspringModel, constant_mean, fractions, interpolate, simulate_abstract
from .cascade import iter_batch, simulate_batch, simulate_cascade
from .graph import Graph, degree_stats, from_edges, load_edge_list, scale_free_graph
from .harmonic import EULER_GAMMA, epoch_time, eta_approx, eta_exact
from .tef import C_FIT, BinnedTef, ParameterError, TefParams, TwoSlopeTef, estimate_tef, fit_two_slope, tef_eval
from .theory import (integrate_fraction_ode, life_span, peak_current, pgf_extinction_prob,
                     shares_at_epoch, summarize)
from .trace import EmbeddedTrace, SimConfig, classify_path, is_viral
from .validate import compare_trace, rho_sweep

__version__ = "0.1.0"

__all__ = [
    "BinnedTef", "C_FIT", "EULER_GAMMA", "EmbeddedTrace", "Graph", "OffspringModel",
    "ParameterError", "SimConfig", "TefParams", "TwoSlopeTef", "classify_path",
    "compare_trace", "constant_mean", "degree_stats", "epoch_time", "estimate_tef",
    "eta_approx", "eta_exact", "fit_two_slope", "fractions", "from_edges",
    "integrate_fraction_ode", "interpolate", "is_viral", "iter_batch", "life_span",
    "load_edge_list", "peak_current", "pgf_extinction_prob", "rho_sweep",
    "scale_free_graph", "shares_at_epoch", "simulate_abstract", "simulate_batch",
    "simulate_cascade", "summarize", "tef_eval",
]
