"""vortexlab: gravitating-vortex and Einstein-Bogomol'nyi solvers on compact
model surfaces (flat torus, round sphere), with a-priori-estimate
certification of every computed solution."""

__version__ = "0.1.0"

from .errors import (
    AssumptionNotSatisfied,
    ConfigError,
    ConvergenceFailure,
    NoSolutionExpected,
    PathStalled,
    VortexlabError,
)
from .fields import DivisorData, ModelParams, build_divisor_fields, derive_params
from .surface import build_surface

__all__ = [
    "__version__",
    "AssumptionNotSatisfied",
    "ConfigError",
    "ConvergenceFailure",
    "NoSolutionExpected",
    "PathStalled",
    "VortexlabError",
    "DivisorData",
    "ModelParams",
    "build_divisor_fields",
    "derive_params",
    "build_surface",
]
