"""
Exception hierarchy for the quantum Lyapunov toolkit
"""

from typing import List, Optional


class LyapunovError(Exception):
    """Base class for every error raised by this package"""


class InvalidArgumentError(LyapunovError, ValueError):
    """An argument violates a documented precondition"""


class DegeneratePerturbationError(LyapunovError, ValueError):
    """The t=0 trace vector vanishes, so nothing can be normalized"""


class InsufficientDataError(LyapunovError):
    """Too few usable points to fit a growth law"""

    def __init__(
        self,
        message: str,
        leakage_profile: Optional[List[float]] = None,
        leakage_limited: bool = False,
    ):
        super().__init__(message)
        self.leakage_profile = list(leakage_profile or [])
        self.leakage_limited = leakage_limited


class TooLargeError(LyapunovError):
    """Dense linear algebra requested above the configured dimension cap"""


class SpectralDefectError(LyapunovError):
    """Eigenbasis is not unitary enough for a trustworthy reconstruction"""

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


class HeisenbergRelationError(LyapunovError):
    """Cat kick orientation does not reproduce p -> M p"""


class ConfigError(LyapunovError, ValueError):
    """Invalid experiment configuration; key_path names the offending entry"""

    def __init__(self, key_path: str, message: str):
        super().__init__(f"{key_path}: {message}")
        self.key_path = key_path
        self.reason = message
