"""Numerical laboratory for large deviations of prime Dirichlet polynomials and log|zeta(1/2+it)|."""
from importlib import resources

from .errors import AliasingWarning, ConvergenceError, DegenerateSampleError, NumericalDegeneracy

__version__ = "0.1.0"

__all__ = [
    "AliasingWarning",
    "ConvergenceError",
    "DegenerateSampleError",
    "NumericalDegeneracy",
    "schema_path",
]


def schema_path(kind: str):
    """Path of the shipped JSON schema for a report kind (tail_report, moment_table, decay, discrepancy)."""
    return resources.files(__package__) / "schemas" / f"{kind}.schema.json"
