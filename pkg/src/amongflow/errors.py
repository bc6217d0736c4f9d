"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: InputError (and its
subclasses) exit 2, TreeMismatchError exit 3, OracleBudgetError exit 4.
"""

from __future__ import annotations


class AmongFlowError(Exception):
    """Base class for all errors raised by this package."""


class InputError(AmongFlowError):
    """Malformed or inconsistent caller input (files, ids, flag combinations)."""


class PreconditionError(InputError):
    """A builder or checker precondition does not hold for the given instance."""


class TreeMismatchError(AmongFlowError):
    """An oriented tree fails to define the hypergraph it was paired with."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics) if diagnostics else [message]


class OracleBudgetError(AmongFlowError):
    """The brute-force oracle would exceed its enumeration budget."""
