"""Exception hierarchy for the GN laboratory."""


class GnLabError(Exception):
    """Base class for all errors raised by gn_lab."""


class KernelError(GnLabError, ValueError):
    """Invalid kernel spec or a query the kernel cannot answer."""


class UnknownVertexError(GnLabError, KeyError):
    """Label is not a member of the tree."""

    def __init__(self, label):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f'unknown vertex: {format_label(self.label)}'


class ConfigError(GnLabError, ValueError):
    """Invalid run configuration or CLI override."""


class SimulationError(GnLabError, RuntimeError):
    """A simulation cannot proceed (overflow, empty queue, bad stop rule)."""


class InvariantViolation(GnLabError, AssertionError):
    """An invariant of the process was observed to fail."""


class RateBoundViolation(InvariantViolation):
    """Total attachment weight exceeded (n+1) f(n) after n births."""


def format_label(label) -> str:
    if not label:
        return 'ε'
    return '.'.join(str(i) for i in label)
