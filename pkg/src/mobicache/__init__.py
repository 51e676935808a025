"""Mobility-aware content cache placement for small-cell networks."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BaseStation,
    Instance,
    InstanceError,
    MobileUser,
    Placement,
    PlacementError,
    ReachabilityTrace,
    trace_from_lists,
    validate_instance,
    validate_placement,
)
from .metrics import EvaluationReport, evaluate, max_degree, reachable_cached_set  # noqa: E402
from .placement import (  # noqa: E402
    approximation_report,
    exact_optimal,
    femtocacher_baseline,
    mobicacher,
    popularity_cacher,
    sojourn_times,
)
