"""Exception hierarchy. Each family maps to one CLI exit code."""

from __future__ import annotations


class KdstError(Exception):
    exit_code = 1


class InfeasibleError(KdstError):
    """The instance (or LP) admits no feasible solution."""

    exit_code = 2


class TerminalUnreachableError(InfeasibleError):
    pass


class ResourceCapError(KdstError):
    """A configured size, budget or iteration cap was hit."""

    exit_code = 3


class PathBlowupError(ResourceCapError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"path enumeration exceeded cap: reached {count} paths (cap {cap})")
        self.count = count
        self.cap = cap


class SolverNonConvergenceError(ResourceCapError):
    pass


class RestartsExhaustedError(ResourceCapError):
    def __init__(self, attempts: int, transcript=None):
        super().__init__(f"no feasible union after {attempts} rounding attempts")
        self.attempts = attempts
        self.transcript = transcript


class ConfigError(KdstError):
    exit_code = 4


class InstanceFormatError(ConfigError):
    """Base for instance-file diagnostics."""


class MalformedInstanceError(InstanceFormatError):
    pass


class NegativeCostError(InstanceFormatError):
    pass


class RootTerminalError(InstanceFormatError):
    pass


class InvalidConnectivityError(InstanceFormatError):
    pass


class ParallelEdgeError(InstanceFormatError):
    pass
