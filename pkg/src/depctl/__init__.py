"""depctl: Monte Carlo lab for capacity tail behavior and dependence control."""

__version__ = "0.1.0"

from .distributions import DistributionSpec, TailClass, TailClassLabel, ground_truth_tail
from .streams import RandomStream

__all__ = [
    "DistributionSpec",
    "RandomStream",
    "TailClass",
    "TailClassLabel",
    "ground_truth_tail",
    "__version__",
]
