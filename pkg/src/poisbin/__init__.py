"""Poisson-binomial laws against their matched Poisson law.

Exact pmfs, saddle-point contour evaluation, the full family of
informational distances, explicit bound checks and a reproducible sweep
harness.
"""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    BernoulliVector,
    LogPmf,
    moments,
    pmf_bruteforce,
    pmf_method,
    poisson_binomial_pmf_dft,
    poisson_binomial_pmf_dp,
    read_probabilities,
)
from .divergences import (  # noqa: E402
    DivergenceReport,
    TruncationPolicy,
    chi_squared,
    divergence_report,
    evaluate,
    poisson_law,
    relative_entropy,
    renyi,
    total_variation,
    tsallis,
    vajda_pearson,
)
from .kernels import BACKEND  # noqa: E402
from .precision import PrecisionPolicy  # noqa: E402

__all__ = [
    "BACKEND", "BernoulliVector", "DivergenceReport", "LogPmf", "PrecisionPolicy", "TruncationPolicy",
    "chi_squared", "divergence_report", "evaluate", "moments", "pmf_bruteforce", "pmf_method",
    "poisson_binomial_pmf_dft", "poisson_binomial_pmf_dp", "poisson_law", "read_probabilities",
    "relative_entropy", "renyi", "total_variation", "tsallis", "vajda_pearson",
]
