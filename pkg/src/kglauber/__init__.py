"""kglauber: parallel block sampling for Ising models with an exact
verification oracle.

The sampler resamples random coordinate blocks from their conditional
laws via rejection sampling against product proposals, recursing on
blocks whose coupling submatrix is too large; the exact module verifies
its distributional correctness and the underlying contraction claims at
small sizes by brute force.
"""

from .errors import ConvergenceError, DepthExceeded, MaxTriesExceeded
from .model import (IsingModel, ProductDistribution, SpinVector, SubsetIndex,
                    conditional_field, energy, load_coupling_matrix,
                    load_field_vector, log_ratio_quadratic, new_ising,
                    operator_norm, product_proposal, prob_plus, sk_model,
                    submatrix_frobenius)
from .parallel import (RunTelemetry, SamplerConfig, default_config,
                       full_region, parallel_ising_sample, run_replicas,
                       sample_configuration)
from .rejection import (RejectionDiagnostics, RejectionOutcome,
                        approx_rejection_sample, default_max_tries,
                        rejection_diagnostics)
from .rng import RngStream
from .sampling import sample_product, sample_subset, sample_subset_sorted

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DepthExceeded", "MaxTriesExceeded",
    "IsingModel", "ProductDistribution", "SpinVector", "SubsetIndex",
    "conditional_field", "energy", "load_coupling_matrix",
    "load_field_vector", "log_ratio_quadratic", "new_ising",
    "operator_norm", "product_proposal", "prob_plus", "sk_model",
    "submatrix_frobenius",
    "RunTelemetry", "SamplerConfig", "default_config", "full_region",
    "parallel_ising_sample", "run_replicas", "sample_configuration",
    "RejectionDiagnostics", "RejectionOutcome", "approx_rejection_sample",
    "default_max_tries", "rejection_diagnostics",
    "RngStream",
    "sample_product", "sample_subset", "sample_subset_sorted",
    "__version__",
]
