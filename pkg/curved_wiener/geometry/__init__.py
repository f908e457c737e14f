"""
Extrinsic Riemannian geometry
사영 기반 리만 기하 모듈
"""

from .fields import (
    VectorField,
    ScalarField,
    PolynomialVectorField,
    PolynomialScalarField,
    ambient_symbols,
    gradient_field,
    projection_fields,
)
from .calculus import covariant_derivative, gradient, hessian_form, laplacian, lie_bracket, manifold_gradient
from .curvature import (
    curvature,
    ricci,
    ricci_operator,
    ricci_form,
    ricci_parallel,
    second_covariant_derivative,
    bochner_residual,
)
from .checks import geometry_check

__all__ = [
    'VectorField',
    'ScalarField',
    'PolynomialVectorField',
    'PolynomialScalarField',
    'ambient_symbols',
    'gradient_field',
    'projection_fields',
    'covariant_derivative',
    'gradient',
    'hessian_form',
    'laplacian',
    'lie_bracket',
    'manifold_gradient',
    'curvature',
    'ricci',
    'ricci_operator',
    'ricci_form',
    'ricci_parallel',
    'second_covariant_derivative',
    'bochner_residual',
    'geometry_check',
]
