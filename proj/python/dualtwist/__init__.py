"""Dual-arm coordinated twisting: kinematics, collision, manipulability,
configuration optimization and the task engine."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
