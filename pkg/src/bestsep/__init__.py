"""Best separable approximation of bipartite density matrices."""

from .bsa import (
    BsaResult,
    Decomposition2x2,
    PairWeights,
    Verdict,
    bsa,
    decompose_2x2,
    entanglement_pure,
    lambda_max_pair,
    lambda_max_single,
    pairwise_sweep,
)
from .criteria import PptReport, ppt_check, range_span_check
from .matcore import DEFAULT_TOL, Tolerances
from .states import (
    CandidateSet,
    DensityOperator,
    ProductVector,
    random_density,
    random_product_vector,
    random_separable,
    werner,
)

__all__ = [
    "BsaResult", "CandidateSet", "DEFAULT_TOL", "Decomposition2x2", "DensityOperator",
    "PairWeights", "PptReport", "ProductVector", "Tolerances", "Verdict", "bsa",
    "decompose_2x2", "entanglement_pure", "lambda_max_pair", "lambda_max_single",
    "pairwise_sweep", "ppt_check", "random_density", "random_product_vector",
    "random_separable", "range_span_check", "werner",
]

__version__ = "0.1.0"
