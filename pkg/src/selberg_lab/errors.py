"""Exception types shared across the lab.

Contract violations and bad inputs raise the builtin ``ValueError``; the
classes here mark *numerical* trouble, which the CLI maps to exit status 3.
"""


class NumericalDegeneracy(RuntimeError):
    """A computation ran but its result cannot be trusted."""


class ConvergenceError(NumericalDegeneracy):
    """An iterative quadrature did not stabilise."""


class DegenerateSampleError(NumericalDegeneracy):
    """Too many samples were rejected while drawing a batch."""


class AliasingWarning(UserWarning):
    """An equispaced grid is too coarse for the fastest oscillation."""
