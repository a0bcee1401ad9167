"""Nearly unstable Hawkes processes and their CIR/Heston scaling limits.

Simulation (thinning and cluster constructions, exact CIR/Heston sampling),
renewal-resolvent computation, the paper-scale rescalings, Monte Carlo
verification experiments, and CIR-based parameter recovery.
"""

from ._backend import NUMBA_ENABLED, backend_name
from .calibration import CIREstimate, estimate_cir, implied_branching_ratio
from .diffusion import CIRParams, CIRPath, HestonParams, cir_exact_step, cir_path, heston_paths
from .grid import GridFunction
from .hawkes import (
    BivariateKernelSpec,
    PointPath,
    intensity_path,
    simulate_bivariate,
    simulate_cluster,
    simulate_thinning,
)
from .kernels import (
    Exponential,
    KernelSpec,
    PowerLaw,
    RegimeSpec,
    SumOfExponentials,
    eval_kernel,
    kernel_cf,
    kernel_mean,
)
from .limits import (
    ComparisonReport,
    RescaledPath,
    empirical_cf_test,
    ks_marginal_test,
    rescale_count,
    rescale_intensity,
    rescale_martingale,
    rescale_price,
)
from .resolvent import (
    compute_resolvent,
    heavy_tail_sigma,
    mittag_leffler_cf,
    rho_cf,
    rho_density,
    sample_geometric_sum,
)

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "BivariateKernelSpec",
    "CIREstimate",
    "CIRParams",
    "CIRPath",
    "ComparisonReport",
    "Exponential",
    "GridFunction",
    "HestonParams",
    "KernelSpec",
    "PointPath",
    "PowerLaw",
    "RegimeSpec",
    "RescaledPath",
    "SumOfExponentials",
    "cir_exact_step",
    "cir_path",
    "compute_resolvent",
    "empirical_cf_test",
    "estimate_cir",
    "eval_kernel",
    "heavy_tail_sigma",
    "heston_paths",
    "implied_branching_ratio",
    "intensity_path",
    "kernel_cf",
    "kernel_mean",
    "ks_marginal_test",
    "mittag_leffler_cf",
    "rescale_count",
    "rescale_intensity",
    "rescale_martingale",
    "rescale_price",
    "rho_cf",
    "rho_density",
    "sample_geometric_sum",
    "simulate_bivariate",
    "simulate_cluster",
    "simulate_thinning",
]

__version__ = "0.1.0"
