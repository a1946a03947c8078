"""Exception hierarchy.

Input problems subclass ``InputError`` (a ``ValueError``); the CLI maps them
to exit code 2. ``NegativeVerdict`` subclasses mean "the order does not
hold" and map to exit code 1.
"""

from __future__ import annotations


class BiasedOrderError(Exception):
    """Base class for all package errors."""


class InputError(BiasedOrderError, ValueError):
    pass


class NonFiniteError(InputError):
    pass


class NegativeMassError(InputError):
    pass


class EmptyMeasureError(InputError):
    pass


class OutOfRangeError(InputError):
    pass


class MassMismatchError(InputError):
    pass


class MarginalMismatchError(InputError):
    pass


class BarycenterMismatchError(InputError):
    pass


class InvalidComponentError(InputError):
    pass


class NotConvexError(InputError):
    pass


class BadAsymptoticsError(InputError):
    pass


class NegativeVerdict(BiasedOrderError):
    """An order relation that was required does not hold."""


class NotInConvexOrderError(NegativeVerdict):
    pass


class NotBiasedError(NegativeVerdict):
    pass


class NotAtomicBiasedError(NegativeVerdict):
    pass


class InfeasibleError(NegativeVerdict):
    """An LP built from the inputs has no feasible point.

    ``certificate`` holds the Farkas vector (original constraint order:
    equalities first, then inequalities) when one is available.
    """

    def __init__(self, message: str, certificate=None, program=None):
        super().__init__(message)
        self.certificate = certificate
        self.program = program


class NotInBiasedOrderError(InfeasibleError):
    pass


class NotInStrongOrderError(InfeasibleError):
    """No strongly biased coupling exists at the requested margin."""


class NumericalBreakdownError(BiasedOrderError):
    pass


class UnboundedError(BiasedOrderError):
    pass
