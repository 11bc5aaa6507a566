"""heatlab: numerical verification of heat-kernel harmonic analysis on
compact-type Lie groups (tori, SU(2), and products)."""

from .groups import (CompactGroup, GroupPoint, ComplexGroupPoint, Irrep,
                     QuadratureRule, make_group, exp_map, irreps_up_to,
                     haar_quadrature, build_irrep)
from .heat import HeatKernel, FourierCoefficients, heat_operator
from .errors import (HeatLabError, UnsupportedGroupError, ResourceCapError,
                     TruncationError, ConsistencyError)

__version__ = "0.1.0"

__all__ = [
    "CompactGroup", "GroupPoint", "ComplexGroupPoint", "Irrep",
    "QuadratureRule", "make_group", "exp_map", "irreps_up_to",
    "haar_quadrature", "build_irrep", "HeatKernel", "FourierCoefficients",
    "heat_operator", "HeatLabError", "UnsupportedGroupError",
    "ResourceCapError", "TruncationError", "ConsistencyError",
]
