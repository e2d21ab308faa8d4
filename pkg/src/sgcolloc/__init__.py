"""Dimension-adaptive sparse-grid stochastic collocation."""

from .adaptive import (AdaptiveConfig, AdaptiveResult, ModelEvaluationError, RefinementError,
                       RefinementRecord, adapt)
from .barycentric import barycentric_eval, barycentric_weights, lagrange_basis
from .distributions import BoundedDistribution, JointDistribution, analytic_mean, pdf, sample
from .models import (ModelError, ParametricModel, WaveguideParams, get_model, te10_cutoff,
                     test_function_registry, waveguide_inputs, waveguide_model, waveguide_s11_mag)
from .multiindex import MultiIndexSet, admissible_set, isotropic_set, refinement_set
from .postproc import (ErrorMetrics, MomentReport, SobolReport, cross_validation_error,
                       moments_from_weights, sobol_saltelli, surrogate_mc)
from .rules import (CLENSHAW_CURTIS, LEJA, QuadratureLevel, UnivariateRule, cc_nodes, cc_weights,
                    leja_extend, leja_weights)
from .sparse import (SparseSurrogate, build_from_index_set, error_indicator, sparse_eval,
                     sparse_quadrature_weights, tensor_interp_eval, tensor_quadrature)

__version__ = "0.1.0"
