"""orbitlab: periodic diagonal orbits, best simultaneous approximations and
(C, alpha)-good functions, computed with certified or exact arithmetic."""

from .errors import (
    ConfigError,
    HypothesisViolation,
    OrbitlabError,
    PrecisionExhausted,
    ResourceCapExceeded,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HypothesisViolation",
    "OrbitlabError",
    "PrecisionExhausted",
    "ResourceCapExceeded",
    "__version__",
]
