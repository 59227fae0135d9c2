"""Exact symbolic curvature laboratory for nilpotent Szabo, Osserman and
Ivanov-Petrova pseudo-Riemannian metrics."""
from .polycore import Polynomial, Role, VarTable, poly_parse, render
from .tensorcalc import (
    MetricSpec,
    TensorField,
    christoffel_first,
    christoffel_second,
    covariant_derivative_riemann,
    inverse_metric,
    parse_metric_text,
    ricci_tensor,
    riemann,
    signature,
)
from .operators import (
    characteristic_checks,
    directions,
    higher_order_jacobi,
    jacobi_operator,
    nilpotency_order,
    rank_at_point,
    ricci_operator,
    skew_curvature_operator,
    szabo_operator,
)
from .families import (
    direct_sum_flat,
    make_gf,
    make_nablaRLS,
    make_osserman_metric,
    make_pointwise_variant,
    make_RL,
    make_szabo_metric,
    span_dimension_check,
)

__version__ = "0.1.0"
