"""Python access to the cavat C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import (
    CHECKPOINT_MAGIC,
    CSV_HEADER,
    Error,
    Network,
    TrainConfig,
    run_experiment,
    sweep,
)

__all__ = [
    "CHECKPOINT_MAGIC",
    "CSV_HEADER",
    "Error",
    "Network",
    "TrainConfig",
    "run_experiment",
    "sweep",
]
