"""Bundled reference interaction on two system qubits and one looping qubit.

The gate permutes the eight computational basis states of ``H1 (x) H2`` with
``H1 = C^4`` (two qubits) and ``H2 = C^2``.  Its interest is the sharp input
``|00><00|``: the fixed-point set there is a full diameter of the Bloch ball,
while arbitrarily close mixed inputs pin a unique fixed state.  Two families
that approach ``|00><00|`` along different axes of mixing therefore select
different fixed states in the limit, and the emitted system state jumps by
trace distance 1/2 between them.
"""

from .states import DensityOperator, UnitaryGate

__all__ = [
    "REFERENCE_PERMUTATION",
    "reference_gate",
    "reference_center",
    "mixed_second_qubit",
    "mixed_first_qubit",
]

REFERENCE_PERMUTATION = (4, 1, 3, 2, 0, 6, 5, 7)


def reference_gate():
    """The reference basis permutation on dims ``(4, 2)``."""
    return UnitaryGate.from_permutation(4, 2, REFERENCE_PERMUTATION)


def reference_center():
    """Sharp input ``|00><00|`` where the fixed-point set is degenerate."""
    return DensityOperator.basis_state(4, 0)


def mixed_second_qubit(eps):
    """Input ``|0><0| (x) diag(1 - eps, eps)``: second qubit slightly mixed.

    For ``0 < eps < 1`` the unique fixed state is maximally mixed.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"mixing weight {eps} outside [0, 1]")
    return DensityOperator.diagonal([1.0 - eps, eps, 0.0, 0.0])


def mixed_first_qubit(eps):
    """Input ``diag(1 - eps, eps) (x) |0><0|``: first qubit slightly mixed.

    For ``0 < eps < 1`` the unique fixed state is ``|0><0|``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"mixing weight {eps} outside [0, 1]")
    return DensityOperator.diagonal([1.0 - eps, 0.0, eps, 0.0])
