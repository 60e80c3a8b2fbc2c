"""Finite metric spaces, Lipschitz-free space norms and the reduction of
isometry of metric spaces to linear isometry of free spaces, at finite scale."""

from .concavity import free_space_isometry_test, is_concave, is_extreme
from .free_space import (
    Molecule,
    dual_norm,
    elementary_molecule,
    holmes_norm,
    mcshane_extend,
    norm,
    norm_certificate,
    primal_norm,
)
from .isometry import find_dilatation, find_isometry
from .katetov import embed_code, extend_partial_isometry, grow_urysohn, one_point_extension, validate_katetov
from .metric import FiniteMetricSpace, MetricCode, PointedSpace, quotient_zero, validate_code
from .pipeline import phi, phi0, theorem1_check

__version__ = "0.1.0"

__all__ = [
    "FiniteMetricSpace",
    "MetricCode",
    "PointedSpace",
    "Molecule",
    "validate_code",
    "quotient_zero",
    "elementary_molecule",
    "mcshane_extend",
    "primal_norm",
    "dual_norm",
    "norm",
    "norm_certificate",
    "holmes_norm",
    "find_isometry",
    "find_dilatation",
    "validate_katetov",
    "one_point_extension",
    "grow_urysohn",
    "embed_code",
    "extend_partial_isometry",
    "is_extreme",
    "is_concave",
    "free_space_isometry_test",
    "phi0",
    "phi",
    "theorem1_check",
]
