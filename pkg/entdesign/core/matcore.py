"""Dense complex matrix kernels shared by every other module.

All functions are pure: they never modify their inputs and return fresh
arrays, so they may be called concurrently from any number of workers.
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from entdesign.core.errors import (
    ConvergenceError,
    DimensionMismatchError,
    NonHermitianError,
)

HERMITIAN_TOL = 1e-10

Subsystem = Literal["A", "B"]


class BipartiteDims(BaseModel):
    """Local dimensions of a bipartite system."""

    model_config = ConfigDict(frozen=True)

    d_A: int
    d_B: int

    @model_validator(mode="after")
    def _check_dims(self):
        if self.d_A < 2 or self.d_B < 2:
            raise DimensionMismatchError(
                f"local dimensions must be >= 2, got ({self.d_A}, {self.d_B})"
            )
        return self

    @property
    def total(self) -> int:
        return self.d_A * self.d_B

    @property
    def balanced(self) -> bool:
        return self.d_A == self.d_B

    def __str__(self) -> str:
        return f"{self.d_A}x{self.d_B}"


def as_matrix(m) -> np.ndarray:
    """Return the raw matrix behind a DensityMatrix, or the array itself."""
    return np.asarray(getattr(m, "matrix", m))


def _check_square(m: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    m = as_matrix(m)
    if m.shape != (dims.total, dims.total):
        raise DimensionMismatchError(
            f"expected a {dims.total}x{dims.total} matrix for dims {dims}, "
            f"got shape {m.shape}"
        )
    return m


def _check_finite(m: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(rho, dims: BipartiteDims, keep: Subsystem = "A") -> np.ndarray:
    """Trace out one subsystem.

    Args:
        rho: d_A*d_B square matrix
        dims: Bipartite dimensions labelling rho
        keep: Subsystem that survives ("A" returns rho_A = tr_B rho)

    Returns:
        The reduced matrix of the kept subsystem
    """
    m = _check_square(rho, dims)
    r = m.reshape(dims.d_A, dims.d_B, dims.d_A, dims.d_B)
    if keep == "A":
        return np.einsum("ijkj->ik", r)
    if keep == "B":
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(rho, dims: BipartiteDims) -> np.ndarray:
    """Transpose subsystem B: out[(i,j),(k,l)] = rho[(i,l),(k,j)]."""
    m = _check_square(rho, dims)
    r = m.reshape(dims.d_A, dims.d_B, dims.d_A, dims.d_B)
    return r.transpose(0, 3, 2, 1).reshape(dims.total, dims.total)


def realign(rho, dims: BipartiteDims) -> np.ndarray:
    """Realignment R[(i,j),(k,l)] = rho[(i,k),(j,l)], shape d_A^2 x d_B^2.

    For a product A (x) B this is vec(A) vec(B)^T.
    """
    m = _check_square(rho, dims)
    r = m.reshape(dims.d_A, dims.d_B, dims.d_A, dims.d_B)
    return r.transpose(0, 2, 1, 3).reshape(dims.d_A**2, dims.d_B**2)


def unrealign(realigned: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    """Inverse of realign."""
    realigned = np.asarray(realigned)
    if realigned.shape != (dims.d_A**2, dims.d_B**2):
        raise DimensionMismatchError(
            f"expected a {dims.d_A**2}x{dims.d_B**2} realigned matrix, "
            f"got shape {realigned.shape}"
        )
    r = realigned.reshape(dims.d_A, dims.d_A, dims.d_B, dims.d_B)
    return r.transpose(0, 2, 1, 3).reshape(dims.total, dims.total)


def singular_values(m) -> np.ndarray:
    """Singular values in descending order, min(rows, cols) of them."""
    m = _check_finite(as_matrix(m))
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"SVD did not converge: {e}") from e


def trace_norm(m) -> float:
    return float(np.sum(singular_values(m)))


def hermiticity_residual(m) -> float:
    m = as_matrix(m)
    return float(np.max(np.abs(m - m.conj().T)))


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and hermiticity_residual(m) <= tol


def eigenvalues(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Ascending real spectrum of a Hermitian matrix."""
    h = _check_finite(as_matrix(h))
    if not is_hermitian(h, tol):
        raise NonHermitianError(
            f"max |h - h^dagger| entry is {hermiticity_residual(h):.3e} > {tol:.0e}"
        )
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigendecomposition did not converge: {e}") from e


def min_eigenvalue(h, tol: float = HERMITIAN_TOL) -> float:
    return float(eigenvalues(h, tol)[0])


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def hermitian_basis(d: int) -> np.ndarray:
    """Canonical orthonormal Hermitian operator basis of dimension d.

    Order: diagonal units E_jj, then for every pair j < k the symmetric
    (E_jk + E_kj)/sqrt(2) followed by the antisymmetric i(E_jk - E_kj)/sqrt(2).

    Returns:
        Array of shape (d*d, d, d); tr(B_a B_b) = delta_ab
    """
    basis = np.zeros((d * d, d, d), dtype=complex)
    idx = 0
    for j in range(d):
        basis[idx, j, j] = 1.0
        idx += 1
    s = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            basis[idx, j, k] = basis[idx, k, j] = s
            idx += 1
            basis[idx, j, k] = 1j * s
            basis[idx, k, j] = -1j * s
            idx += 1
    return basis


def swap_operator(d: int) -> np.ndarray:
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    return swap


def symmetric_projector(d: int) -> np.ndarray:
    """Projector onto the symmetric subspace of C^d (x) C^d."""
    return (np.eye(d * d) + swap_operator(d)) / 2.0


def purity(rho) -> float:
    m = as_matrix(rho)
    return float(np.real(np.trace(m @ m)))
