"""Cokernel flags of products of random p-adic matrices.

The package samples products of random integer matrices, reads the chain of
cokernel surjections they define, and compares the empirical law with exact
limiting formulas, including a Hall-Littlewood route to the conditional
convolution of cokernels.
"""

__version__ = "0.1.0"

from .partitions import GroupType, Partition, aut_order, cohen_lenstra_constant, partitions_of
from .linalg import MatrixMod, RingSpec, cokernel_type, snf
from .groups import ExplicitGroup, FlagClass, Subgroup, canonicalize_flag, flag_aut_order, hall_number
from .sampler import EntryDistribution, Experiment, alpha_of, parse_distribution, run_experiment, sample_flag
from .theory import FlagMeasureQuery, conditional_convolution, corank_conditional, flag_measure
from .hall_littlewood import hl_limit_constants, normalized_constants, structure_constants
from .stats import Histogram, chi_square_report, merge, tv_distance

__all__ = [
    "EntryDistribution",
    "Experiment",
    "ExplicitGroup",
    "FlagClass",
    "FlagMeasureQuery",
    "GroupType",
    "Histogram",
    "MatrixMod",
    "Partition",
    "RingSpec",
    "Subgroup",
    "alpha_of",
    "aut_order",
    "canonicalize_flag",
    "chi_square_report",
    "cohen_lenstra_constant",
    "cokernel_type",
    "conditional_convolution",
    "corank_conditional",
    "flag_aut_order",
    "flag_measure",
    "hall_number",
    "hl_limit_constants",
    "merge",
    "normalized_constants",
    "parse_distribution",
    "partitions_of",
    "run_experiment",
    "sample_flag",
    "snf",
    "structure_constants",
    "tv_distance",
]
