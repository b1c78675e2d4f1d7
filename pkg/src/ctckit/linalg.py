"""Dense linear-algebra helpers for small bipartite systems.

Composite indices follow the row-major convention: basis state ``|i, a>`` of
``H1 (x) H2`` lives at flat index ``i * dim2 + a``, matching ``numpy.kron``.
"""

import numpy as np

__all__ = [
    "dagger",
    "kron",
    "partial_trace_1",
    "partial_trace_2",
    "conjugate",
    "hermitian_trace_norm",
    "matrix_to_json",
    "matrix_from_json",
]


def dagger(m):
    """Conjugate transpose."""
    return np.conjugate(np.transpose(m))


def kron(a, b):
    """Kronecker product with the first factor on the slow index."""
    return np.kron(a, b)


def _as_quad(m, dim1, dim2):
    m = np.asarray(m)
    if m.shape != (dim1 * dim2, dim1 * dim2):
        raise ValueError(
            f"matrix shape {m.shape} incompatible with dims ({dim1}, {dim2})"
        )
    return m.reshape(dim1, dim2, dim1, dim2)


def partial_trace_1(m, dim1, dim2):
    """Trace out the first factor of a ``(dim1*dim2) x (dim1*dim2)`` matrix."""
    return np.einsum("aiaj->ij", _as_quad(m, dim1, dim2))


def partial_trace_2(m, dim1, dim2):
    """Trace out the second factor of a ``(dim1*dim2) x (dim1*dim2)`` matrix."""
    return np.einsum("iaja->ij", _as_quad(m, dim1, dim2))


def conjugate(u, m, permutation=None):
    """Return ``u @ m @ u^dagger``.

    When ``u`` is known to be a permutation matrix, pass its image list
    (``u[permutation[j], j] == 1``) to use index shuffling instead of two
    matrix products.
    """
    if permutation is not None:
        inv = np.argsort(np.asarray(permutation))
        return np.asarray(m)[np.ix_(inv, inv)]
    return u @ m @ dagger(u)


def hermitian_trace_norm(m):
    """Trace norm (sum of absolute eigenvalues) of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def matrix_to_json(m):
    """Serialize a complex matrix as flat row-major real/imaginary parts."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError("expected a 2-D array")
    return {
        "rows": m.shape[0],
        "cols": m.shape[1],
        "re": m.real.ravel().tolist(),
        "im": m.imag.ravel().tolist(),
    }


def matrix_from_json(obj):
    """Inverse of :func:`matrix_to_json`, with shape/length validation."""
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if re.shape != (rows * cols,) or im.shape != (rows * cols,):
        raise ValueError(
            f"matrix entries have length {re.size}/{im.size}, expected {rows * cols}"
        )
    return (re + 1j * im).reshape(rows, cols)
