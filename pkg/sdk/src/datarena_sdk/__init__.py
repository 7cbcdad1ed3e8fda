"""Participant toolkit: arena API client, public bundle readers, and
reference baseline algorithms.

Everything here talks to a datarena service strictly through its HTTP API
and the published bundle file formats; no server-side code is imported.
"""

from .baselines import (
    BudgetExceedsPool,
    ProbeModel,
    baseline_random_selection,
    baseline_smallloss_debug_priority,
    baseline_uncertainty_selection,
    train_probe,
)
from .bundles import PublicBundle, PublicDataset, load_public_dataset
from .client import ArenaAPIError, ArenaClient, ClientConfig

__version__ = "0.1.0"

__all__ = [
    "ArenaAPIError",
    "ArenaClient",
    "BudgetExceedsPool",
    "ClientConfig",
    "ProbeModel",
    "PublicBundle",
    "PublicDataset",
    "baseline_random_selection",
    "baseline_smallloss_debug_priority",
    "baseline_uncertainty_selection",
    "load_public_dataset",
    "train_probe",
]
