"""Line elements, induced distances and metrizability checks for rank (U, L) tensor fields."""

from .catalog import build, list_ids
from .checker import check_metric, check_symmetry, classify_definiteness
from .scalars import Scalar, projective_equiv
from .solver import SolverConfig, curve_length, distance
from .tensor import Chart, MetricSpec, TensorField, line_element

__all__ = [
    "Chart",
    "MetricSpec",
    "Scalar",
    "SolverConfig",
    "TensorField",
    "build",
    "check_metric",
    "check_symmetry",
    "classify_definiteness",
    "curve_length",
    "distance",
    "line_element",
    "list_ids",
    "projective_equiv",
]
