"""Orthonormal Hermitian operator bases (generalized Gell-Mann matrices).

For dimension ``d`` the basis has ``d**2`` elements: the normalized identity
``I/sqrt(d)`` first, then ``d**2 - 1`` traceless matrices ordered as symmetric
pairs, antisymmetric pairs, then diagonal matrices. Orthonormality is in the
Hilbert-Schmidt inner product ``<A, B> = Tr(A B)``, so for a qubit the
traceless elements are ``X/sqrt(2), Y/sqrt(2), Z/sqrt(2)``.

Hermitian operators then correspond to real coordinate vectors, and any
trace-preserving linear map becomes a real affine map on the traceless block.
"""

from functools import lru_cache

import numpy as np

__all__ = ["HermitianBasis", "hermitian_basis"]


def _gell_mann_elements(dim):
    out = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            out.append(m)
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1.0j / np.sqrt(2.0)
            m[k, j] = 1.0j / np.sqrt(2.0)
            out.append(m)
    for l in range(1, dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[range(l), range(l)] = 1.0
        m[l, l] = -float(l)
        out.append(m / np.sqrt(l * (l + 1)))
    for m in out:
        m.setflags(write=False)
    return tuple(out)


class HermitianBasis:
    """Coordinate charts between Hermitian matrices and real vectors."""

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.elements = _gell_mann_elements(dim)
        self.traceless = self.elements[1:]

    @property
    def n_traceless(self):
        return self.dim * self.dim - 1

    def traceless_coords(self, m):
        """Real coordinates ``x_i = Tr(m B_i)`` over the traceless elements."""
        return np.array([np.trace(m @ b).real for b in self.traceless])

    def from_traceless(self, x, trace=1.0):
        """Hermitian matrix with the given traceless coordinates and trace."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_traceless,):
            raise ValueError(f"expected {self.n_traceless} coordinates, got {x.shape}")
        m = (trace / self.dim) * np.eye(self.dim, dtype=complex)
        for xi, b in zip(x, self.traceless):
            m = m + xi * b
        return m


@lru_cache(maxsize=None)
def hermitian_basis(dim):
    """Cached basis instance for ``dim``."""
    return HermitianBasis(dim)
