"""Berry-Esseen bounds for Poisson functionals: chaos calculus, contractions and simulation."""

__version__ = "0.1.0"

from .bounds import (BoundReport, Theorem31Terms, dejong_bound, finite_expansion_bound,
                     fourth_moment_from_contractions, fourth_moment_gap, multiple_integral_bound,
                     theorem31_terms_mc)
from .chaos import (ChaosExpansion, Kernel, SeparableKernel, chaos_variance, check_degeneracy, constant_kernel,
                    cosine_family, cosine_product, evaluate_multiple_integral, hoeffding_kernels,
                    indicator_distance, multiple_integral_batch, partial_multiple_integrals, tensor_product,
                    ustat_batch, ustat_evaluate, ustat_mean)
from .contraction import ContractionIndex, contract, contraction_norm, symmetrize
from .diagnostics import RateTable, SampleSet, kolmogorov_distance, normal_cdf, rate_slope
from .errors import (ContractionIndexError, DensityTooPeakedError, DomainError, DuplicatePointError,
                     EmptySampleError, MethodUnsupportedError, NotDegenerateError, NotNormalizedError,
                     NumericalDomainError, PoissonSteinError)
from .measure_space import ControlMeasure, IntegrationSpec, integrate, l2_norm
from .point_process import (ConfigurationBatch, Functional, PointConfiguration, add_one_cost, sample_batch,
                            sample_configuration, second_difference)
from .scenarios import (LevyNu, Scenario, build_dejong_cosine, build_ou_levy, build_pairwise, run_rate_study,
                        simulate)
from .stein import SteinFunction, stein_residual, stein_solution

__all__ = [name for name in dir() if not name.startswith("_")]
