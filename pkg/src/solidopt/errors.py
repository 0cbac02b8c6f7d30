"""Exception types shared across the package."""

import numpy as np


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """W_X stayed indefinite after the full jitter escalation."""


class EmptyModelError(RuntimeError):
    """Global selection removed every variable."""


class ConfigError(ValueError):
    """Invalid run or benchmark configuration."""
