"""Left-tail probabilities and densities of sums of i.i.d. lognormals.

Saddlepoint approximations, Lambert-W asymptotics of the Laplace transform,
exact samplers for the exponentially tilted lognormal, and importance
sampling estimators built on them.
"""

from .cramer import SaddleSolve, asymptotic_lemma_check, gamma_of_x, theta_solve, theta_tilde
from .errors import ConvergenceError, DomainError, InsufficientSampleError, SamplerCapError
from .estimate import MonteCarloEstimate
from .lambertw import lambert_w
from .laplace import (CumulantSet, LognormalModel, QuadratureConfig, control_variate_mean,
                      cumulants, laplace_asymptotic, laplace_is_estimate, laplace_k,
                      laplace_power_estimate, log_laplace_k, moment_asymptotic)
from .montecarlo import (EfficiencyDiagnostic, cdf_is_estimate, efficiency_diagnostic,
                         naive_estimate, pdf_is_estimate)
from .saddlepoint import (SaddlepointResult, b_functions, cdf_approx, density_approx,
                          log_cdf_approx, saddlepoint)
from .tilted import (SamplerReport, TiltedParams, acceptance_prob_gamma, approx_cdf_gamma,
                     approx_cdf_lognormal, approx_cdf_normal, sample_auto, sample_gamma_ar,
                     sample_naive, tilted_mean_exact, tilted_mean_var_asymptotic)

__version__ = "0.1.0"
