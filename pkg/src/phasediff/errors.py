"""Exception types raised by the toolkit.

Every error derives from :class:`PhaseDiffError` so callers (and the CLI)
can separate numerical failures from programming errors.
"""

from __future__ import annotations


class PhaseDiffError(Exception):
    """Base class for all toolkit errors."""


class DomainError(PhaseDiffError, ValueError):
    """An argument lies outside its mathematical domain."""


class TruncationError(PhaseDiffError):
    """The Fock tail beyond the cutoff exceeds the configured tolerance."""

    def __init__(self, tail: float, epsilon_tail: float, n_max: int):
        self.tail = tail
        self.epsilon_tail = epsilon_tail
        self.n_max = n_max
        super().__init__(
            f"Fock tail {tail:.3e} beyond n_max={n_max} exceeds tolerance {epsilon_tail:.3e}"
        )


class CutoffLimitError(PhaseDiffError):
    """The required cutoff exceeds the configured hard limit."""


class ConventionError(PhaseDiffError):
    """Input violates a representation convention (e.g. complex entries on the real path)."""


class PositivityError(PhaseDiffError):
    """A density matrix has an eigenvalue below the positivity floor."""


class RangeError(PhaseDiffError):
    """A recurrence produced non-finite values."""


class GridCoverageError(PhaseDiffError):
    """The quadrature grid does not capture the outcome distribution."""


class NoCrossingError(PhaseDiffError):
    """A bracketing search found the same regime at both endpoints."""


class EstimationError(PhaseDiffError):
    """The likelihood carries no information about the parameter."""


class FitError(PhaseDiffError):
    """The least-squares design matrix is rank deficient."""
