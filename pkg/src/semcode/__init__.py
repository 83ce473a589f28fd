"""Timeliness-aware optimal codeword lengths for filtered status updates."""

from .codec import Codebook, build_codebook, decode, encode, integer_lengths
from .experiments import SweepSpec, calibrate_w, find_optimal_k, sweep_cost, sweep_k, sweep_lambda
from .optimizer import CodewordSolution, lengths_given_mu, objective_at, solve, solve_source
from .probability import SourcePmf, TruncatedSource, truncate, uniform_pmf, zipf_pmf
from .simulator import SimConfig, SimStats, analytic_vs_empirical_report, simulate
from .special import lambert_w0
from .timeliness import (
    Case,
    PenaltyConfig,
    QuadraticForm,
    expected_q,
    penalty_segment_integral,
    penalty_value,
    quadratic_form,
)

__version__ = "0.1.0"
