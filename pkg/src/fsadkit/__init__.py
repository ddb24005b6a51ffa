"""Few-shot anomaly detection with adversarial feature-pair training."""

__version__ = "0.1.0"

from . import errors  # noqa: F401
