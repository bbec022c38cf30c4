"""Relativistic oblivious-transfer simulator.

Subpackages by layer: :mod:`scotsim.minkowski` (causal geometry),
:mod:`scotsim.quantum` (states and measurements),
:mod:`scotsim.dqacm` (the delegated-measurement primitive),
:mod:`scotsim.bounds` (closed-form security bounds),
:mod:`scotsim.adversary` (cheating strategies and their optimization),
:mod:`scotsim.protocol` (scheduled protocol runs on spacetime layouts),
:mod:`scotsim.cli` (command line front end).
"""

from .errors import CapacityError, ConfigError, LayoutError, SchedulingError

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigError",
    "LayoutError",
    "SchedulingError",
    "__version__",
]
