from .accessibility import AccessibilityChecker, HttpChecker, StubChecker, accessibility_score, checker_from_env
from .harvest import CatalogEndpoint, DatasetMetadata, HarvestError, HarvestResult, harvest_catalog, harvest_sample
from .http import HostPolicy, ProbeClient, ProbeError, ProbeResult, probe_endpoint, probe_load_time
from .observe import auto_observe, fragment_from_results, result_to_observation

__all__ = [
    "AccessibilityChecker",
    "CatalogEndpoint",
    "DatasetMetadata",
    "HarvestError",
    "HarvestResult",
    "HostPolicy",
    "HttpChecker",
    "ProbeClient",
    "ProbeError",
    "ProbeResult",
    "StubChecker",
    "accessibility_score",
    "auto_observe",
    "checker_from_env",
    "fragment_from_results",
    "harvest_catalog",
    "harvest_sample",
    "probe_endpoint",
    "probe_load_time",
    "result_to_observation",
]
