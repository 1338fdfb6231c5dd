"""seqemp: sequential empirical processes for dependent data.

Simulate chains, iterated function systems, moving averages and expanding
maps; compute partial-sum empirical fields and the CUSUM change-point
statistic; calibrate against the limiting Gaussian field sampled from a
long-run covariance kernel; and verify spectral, mixing and bracketing
regularity numerically on finite instances.
"""

__version__ = "0.1.0"

from .empirical import (CusumResult, FunctionClass, SeqField, cusum_statistic,
                        r_field, sequential_empirical, sup_r_field)
from .errors import NumericError, ValidationError
from .kiefer import (KieferModel, LongRunKernel, build_kiefer, chain_kernel,
                     critical_value, estimate_longrun_kernel,
                     iid_interval_kernel, sample_sup_bridge)
from .processes import (AffineMap, FiniteChainSpec, IfsSpec, IidSpec, MaSpec,
                        SamplePath, check_contraction_average, simulate,
                        simulate_chain, simulate_expanding_map, simulate_ifs,
                        simulate_ma, two_state_chain)
from .spectral import (ergodicity_rate, leading_eigen, perturbed_operator,
                       sigma2_from_eigen, sigma2_from_series, spectral_report)

__all__ = [
    "__version__",
    "AffineMap", "CusumResult", "FiniteChainSpec", "FunctionClass",
    "IfsSpec", "IidSpec", "KieferModel", "LongRunKernel", "MaSpec",
    "NumericError", "SamplePath", "SeqField", "ValidationError",
    "build_kiefer", "chain_kernel", "check_contraction_average",
    "critical_value", "cusum_statistic", "ergodicity_rate",
    "estimate_longrun_kernel", "iid_interval_kernel", "leading_eigen",
    "perturbed_operator", "r_field", "sample_sup_bridge",
    "sequential_empirical", "sigma2_from_eigen", "sigma2_from_series",
    "simulate", "simulate_chain", "simulate_expanding_map", "simulate_ifs",
    "simulate_ma", "spectral_report", "sup_r_field", "two_state_chain",
]
