"""Optimum query exponents and secret key capacity of multiterminal sources."""

__version__ = "0.1.0"

from .errors import (
    ContractError,
    CRQueryError,
    ResourceError,
    ValidationError,
)
from .fractional import dual_of, enumerate_family, query_exponent, query_exponent_alt, solve_lp
from .partitions import divergence_exponent, enumerate_partitions, gaussian_exponent
from .pmf import JointPmf, Measure, TypicalSet, dsbs, entropy, conditional_entropy, kl_divergence, renyi_entropy
from .protocols import Protocol, empirical_exponent, run_protocol, sample_source, simulate
from .queries import QueryStrategy, optimal_strategy, query_count
from .renyi import high_mass_set, cardinality_lower_bound, source_coding_bounds
from .secrecy import KeyTranscriptPmf, s_in, s_var, strong_converse_gap

__all__ = [
    "CRQueryError", "ContractError", "ResourceError", "ValidationError",
    "dual_of", "enumerate_family", "query_exponent", "query_exponent_alt", "solve_lp",
    "divergence_exponent", "enumerate_partitions", "gaussian_exponent",
    "JointPmf", "Measure", "TypicalSet", "dsbs", "entropy", "conditional_entropy", "kl_divergence",
    "renyi_entropy",
    "Protocol", "empirical_exponent", "run_protocol", "sample_source", "simulate",
    "QueryStrategy", "optimal_strategy", "query_count",
    "high_mass_set", "cardinality_lower_bound", "source_coding_bounds",
    "KeyTranscriptPmf", "s_in", "s_var", "strong_converse_gap",
]
