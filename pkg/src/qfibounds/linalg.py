"""Dense complex matrix helpers: operator norms, Hermitian spectra, Kronecker products."""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

HERMITIAN_TOL = 1e-12


def as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    return A


def dag(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def is_hermitian(M, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    return bool(np.max(np.abs(A - dag(A)), initial=0.0) <= tol * scale)


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + dag(M))


def op_norm(M) -> float:
    """Largest singular value of ``M``."""
    A = as_matrix(M)
    return float(np.linalg.svd(A, compute_uv=False)[0])


def herm_eig(M, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(w, V)`` with ``w`` in descending order and ``M = V diag(w) V^dagger``.
    Each eigenvector's largest-modulus entry is made real positive, and
    degenerate eigenvalues are ordered by the lexicographic order of their
    eigenvectors, so repeated calls give identical output.
    """
    A = as_matrix(M)
    if not is_hermitian(A, tol):
        raise InvalidInputError("matrix is not Hermitian within tolerance")
    w, V = np.linalg.eigh(hermitian_part(A))
    idx = np.argmax(np.abs(V), axis=0)
    phases = V[idx, np.arange(V.shape[1])]
    V = V * (np.abs(phases) / phases)[None, :]

    # descending eigenvalues; near-ties resolved by vector entries
    cols = list(range(len(w)))
    rounded = np.round(w, 10)

    def sort_key(k):
        vec = V[:, k]
        return (-rounded[k], tuple(np.round(vec.real, 12)), tuple(np.round(vec.imag, 12)))

    cols.sort(key=sort_key)
    return w[cols], V[:, cols]


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def min_eig(M: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``M``."""
    return float(np.linalg.eigvalsh(hermitian_part(np.asarray(M, dtype=complex)))[0])


def real_embedding(M: np.ndarray) -> np.ndarray:
    """Map a Hermitian ``X + iY`` to the real symmetric ``[[X, -Y], [Y, X]]``."""
    X, Y = M.real, M.imag
    return np.block([[X, -Y], [Y, X]])


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
