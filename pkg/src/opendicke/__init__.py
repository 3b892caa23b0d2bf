"""Open-system simulation of a driven condensate coupled to a lossy cavity."""

__version__ = "0.1.0"

from .params import DickeParams, PhysicalParams, map_to_dicke  # noqa: F401
from .meanfield import MeanFieldState, critical_coupling  # noqa: F401
