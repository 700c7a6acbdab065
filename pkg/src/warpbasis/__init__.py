"""Perturbed L2 bases via composition with parametric bi-Lipschitz maps.

Construct families gamma_n(h(.)) and gamma_n(h(.)) det(J_h)^(1/2) from the
Hermite functions and an invertible map h, certify numerically whether they
form orthonormal or Riesz bases, expand targets with the closed-form dual
coefficients, and optimize the map parameters to minimize the expansion
error.
"""

from .approx import (DivergenceError, Expansion, OptConfig, TargetFn,
                     convergence_curve, custom_expression, expand,
                     optimize_map, parse_target, reconstruct,
                     shifted_gaussian, sin_abs_gaussian)
from .basis import BasisFamily, BasisSpec, basis_column, hermite_eval
from .eigen import symmetric_eigenvalues
from .lipnet import LipMlp, constrain, mlp_deriv, mlp_eval, random_net, spectral_norm
from .maps import (AffineBlock, DensityKind, MapSpec, NonConvergenceError,
                   ResidualBlock, UnsupportedDimensionError, constrain_map,
                   density, identity_map, jacobian_det, lipschitz_interval,
                   load_map, map_forward, map_inverse, residual_affine_template,
                   save_map, scaling_map, shift_map)
from .operators import (BasisFlavor, Certificate, GramReport, PerturbedBasis,
                        Verdict, biorthogonality_matrix, certify,
                        eval_perturbed, gram_matrix, operator_norm_estimate)
from .quad import NonFiniteSampleError, QuadRule, build_rule, default_rule, inner_product

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
