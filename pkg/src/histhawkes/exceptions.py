"""Exception types raised by histhawkes."""


class HistHawkesError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(HistHawkesError, ValueError):
    """Model and data disagree on the number of dimensions."""


class InvalidKernelError(HistHawkesError, ValueError):
    """Kernel parameters violate a structural invariant."""


class InvalidDataError(HistHawkesError, ValueError):
    """Count data failed validation (negative, ragged, non-integer, gaps)."""


class NonFiniteLikelihoodError(HistHawkesError, FloatingPointError):
    """The log-likelihood evaluated to NaN or infinity."""


class UnstableProcessError(HistHawkesError, RuntimeError):
    """A simulated intensity exceeded the configured count ceiling."""


class ConfigError(HistHawkesError, ValueError):
    """A configuration document is malformed or inconsistent."""


class ChainFailure(HistHawkesError, RuntimeError):
    """An MCMC chain could not be initialised or crashed."""

    def __init__(self, chain_index, message):
        super().__init__(f"chain {chain_index}: {message}")
        self.chain_index = chain_index
