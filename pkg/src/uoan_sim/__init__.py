"""Monte Carlo simulator for hybrid opto-acoustic underwater networks.

Builds random 3D deployments of multifaceted optical/acoustic nodes,
evaluates per-link budgets (Beer-Lambert optical, Thorp acoustic),
routes traffic with the widest-path algorithm, and runs RSS-based
network localization, aggregating everything into seeded, reproducible
parameter sweeps.
"""

__version__ = "0.1.0"

from .errors import ConfigurationError, DegenerateGeometryError, DomainError

__all__ = [
    "ConfigurationError",
    "DegenerateGeometryError",
    "DomainError",
    "__version__",
]
