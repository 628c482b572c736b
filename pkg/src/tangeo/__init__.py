"""Graphs of vector fields as submanifolds of tangent bundles with g-natural metrics."""

from .bundle import BundleVector, TangentPoint, bundle_christoffel, bundle_metric, horizontal_lift, split, vertical_lift
from .dual import CENTRAL, FORWARD_DUAL, Dual, DiffMode
from .gnatural import (
    GeneratorSet,
    ScalarFn,
    check_nondegenerate,
    cheeger_gromoll,
    construct_concircular_family,
    construct_recurrent_example,
    derived_at,
    preset,
    random_polynomial_family,
    sasaki,
)
from .manifold import (
    ChartManifold,
    VectorField,
    christoffel_at,
    classify_field,
    cone,
    covariant_derivative,
    euclidean,
    flat_torus,
    poincare_half_plane,
    riemann_at,
    sample_points,
    second_covariant,
    sphere,
    sphere_cylinder,
)
from .submanifold import (
    SamplingConfig,
    constant_length_converse,
    lifted_derivative_form,
    lifted_derivative_oracle,
    normal_basis,
    sff_oracle,
    shape_operator_oracle,
    tangent_basis,
    totally_geodesic_test,
    tw_tv_concircular,
    tw_tv_general,
    tw_tv_recurrent,
)

__version__ = "0.1.0"
