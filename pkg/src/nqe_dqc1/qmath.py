"""Dense complex linear algebra for Hilbert spaces of at most five qubits.

Matrices are plain ``numpy`` complex128 arrays (row-major). The thin wrappers
below add the shape checks the rest of the package relies on; the Hermitian
eigensolver is a cyclic complex Jacobi method so that trace distances do not
depend on LAPACK behaviour.

Qubit ordering: qubit 1 is the most significant bit of a basis index.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, NumericError, ShapeError

# tolerances, referenced by tests and docs
STATE_NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-8
PSD_TOL = 1e-9
JACOBI_OFFDIAG_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or 0 in a.shape:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def _square(a: np.ndarray) -> int:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape}")
    return a.shape[0]


def n_qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ShapeError(f"dimension {dim} is not a power of two")
    return n


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the leading (more significant) factor."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(*factors) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for f in factors:
        out = kron(out, f)
    return out


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def normalized_trace(a) -> complex:
    """Tr(a) / dim for a square matrix whose dimension is a power of two."""
    a = as_matrix(a)
    dim = _square(a)
    n_qubits_of(dim)
    return complex(np.trace(a) / dim)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = as_matrix(u)
    dim = _square(u)
    return bool(np.max(np.abs(adjoint(u) @ u - np.eye(dim))) < tol)


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    _square(a)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def hermitian_eigenvalues(a) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a[p, q]`` with a
    diagonal unitary, then applies the real symmetric Jacobi rotation that
    zeroes it. Sweeps continue until the off-diagonal Frobenius norm drops
    below ``JACOBI_OFFDIAG_TOL`` (scaled by the matrix norm when that exceeds 1).
    """
    a = as_matrix(a)
    dim = _square(a)
    if not is_hermitian(a):
        raise DomainError("matrix is not Hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    if dim == 1:
        return np.array([a[0, 0].real])

    threshold = JACOBI_OFFDIAG_TOL * max(1.0, np.linalg.norm(a))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < threshold:
            return np.sort(np.diag(a).real)
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                # tan(2t) = 2r / (a_qq - a_pp), smallest rotation |t| <= pi/4
                d = (a[q, q] - a[p, p]).real
                t = 0.5 * np.arctan(2.0 * r / d) if d != 0.0 else np.pi / 4
                c, s = np.cos(t), np.sin(t)
                # rotation W acting on columns p, q: a <- W^H a W
                col_p = a[:, p].copy()
                col_q = a[:, q] * np.conj(phase)
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :] * phase
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
    raise NumericError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def matrix_exp_diagonal(diag_phases) -> np.ndarray:
    """diag(exp(i * phase)) for a power-of-two number of phases."""
    phases = np.asarray(diag_phases, dtype=float)
    if phases.ndim != 1:
        raise ShapeError("phases must be a 1-D list")
    n_qubits_of(len(phases))
    return np.diag(np.exp(1j * phases))


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def check_density(rho, tol: float = STATE_NORM_TOL) -> None:
    """Raise ``DomainError`` unless ``rho`` is Hermitian, unit trace and PSD."""
    rho = as_matrix(rho)
    n_qubits_of(_square(rho))
    if not is_hermitian(rho, tol):
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise DomainError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
    if hermitian_eigenvalues(rho)[0] < -PSD_TOL:
        raise DomainError("density matrix is not positive semidefinite")
