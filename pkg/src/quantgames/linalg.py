"""Dense complex matrix primitives.

Matrices are plain ``numpy`` arrays. Everything here is a pure function;
inputs are never modified in place.
"""

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def as_matrix(m, name="matrix"):
    """Coerce to a finite square complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def as_state(psi, name="state", tol=1e-12):
    """Coerce to a normalized complex amplitude vector."""
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValidationError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    norm = np.vdot(v, v).real
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"{name} is not normalized (norm^2 = {norm!r})")
    return v


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def hermitian_part(h, name="matrix"):
    """Return (h + h^dagger)/2, rejecting inputs that are not Hermitian to tolerance."""
    h = as_matrix(h, name)
    if not is_hermitian(h):
        raise ValidationError(f"{name} is not Hermitian within {HERMITIAN_TOL:g}")
    return (h + h.conj().T) / 2


def tensor_product(a, b):
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def commutator(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def partial_trace(rho, dims, keep=0):
    """Reduce a bipartite operator on ``dims[0] x dims[1]`` to subsystem ``keep`` (0 or 1)."""
    rho = as_matrix(rho, "rho")
    da, db = (int(d) for d in dims)
    if da < 1 or db < 1 or da * db != rho.shape[0]:
        raise ValidationError(f"dims {tuple(dims)} do not factor dimension {rho.shape[0]}")
    if keep not in (0, 1):
        raise ValidationError("keep must be 0 (first subsystem) or 1 (second subsystem)")
    t = rho.reshape(da, db, da, db)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


def matrix_function_hermitian(h, f):
    """Apply scalar ``f`` to a Hermitian matrix through its eigendecomposition.

    ``f`` receives the real eigenvalue array and must be vectorized.
    """
    h = hermitian_part(h, "h")
    w, v = np.linalg.eigh(h)
    return (v * np.asarray(f(w))) @ v.conj().T


def clamp_spectrum(w, tol=1e-10):
    """Clamp density-matrix eigenvalues into [0, 1] when they sit within ``tol`` of it."""
    w = np.asarray(w, dtype=float)
    if np.any(w < -tol) or np.any(w > 1 + tol):
        raise ValidationError(f"eigenvalues outside [0, 1] beyond tolerance: {w}")
    return np.clip(w, 0.0, 1.0)


def xlogx(w):
    """Elementwise w*ln(w) with the 0*ln(0) = 0 limit."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log(w[pos])
    return out
