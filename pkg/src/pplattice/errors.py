"""Exception types shared across the package.

Two failure families matter operationally: bad configuration (rejected before
any numerics run) and numerical failure (detected while running).  The CLI
maps them to exit codes 2 and 3 respectively.
"""


class PPLatticeError(Exception):
    """Base class for package errors."""


class ConfigError(PPLatticeError, ValueError):
    """Invalid parameters, shapes, files, or configuration values."""


class NumericsError(PPLatticeError, RuntimeError):
    """A computation failed or produced untrustworthy results."""


class TruncationError(NumericsError):
    """A Fock-space cutoff leaves more probability mass outside than allowed."""


class DivergenceError(NumericsError):
    """Every trajectory of an ensemble diverged; no statistics available."""
