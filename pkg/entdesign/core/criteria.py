"""Correlation based separability criteria.

Linear criteria (CCNR, ESIC, E2D) bound the trace norm of a correlation
matrix by 1. Nonlinear criteria (LUR, LSIC, L2D) bound a variance expression
from below by 0. PPT is reported with the same record for comparison.
"""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from entdesign.core.designs import NormalizedDesign, design_probabilities
from entdesign.core.errors import (
    DimensionMismatchError,
    InvariantViolation,
    UnbalancedDimensionsError,
)
from entdesign.core.matcore import (
    as_matrix,
    hermitian_basis,
    min_eigenvalue,
    partial_transpose,
    realign,
    trace_norm,
)
from entdesign.core.states import DensityMatrix

logger = logging.getLogger("entdesign.criteria")

VERDICT_TOL = 1e-9
CORRELATION_IMAG_TOL = 1e-8
HERMITIZATION_TOL = 1e-6


class CriterionReport(BaseModel):
    """Outcome of one criterion on one state.

    margin is value - bound for linear criteria (and PPT) and -value for
    nonlinear ones, so a positive margin always points towards entanglement.
    """

    model_config = ConfigDict(frozen=True)

    criterion: str
    value: float
    bound: float
    entangled: bool
    margin: float

    @classmethod
    def linear(cls, criterion: str, value: float, bound: float = 1.0):
        margin = value - bound
        return cls(
            criterion=criterion,
            value=value,
            bound=bound,
            entangled=margin > VERDICT_TOL,
            margin=margin,
        )

    @classmethod
    def nonlinear(cls, criterion: str, value: float):
        margin = -value
        return cls(
            criterion=criterion,
            value=value,
            bound=0.0,
            entangled=margin > VERDICT_TOL,
            margin=margin,
        )


class SchmidtDecomposition(BaseModel):
    """rho = sum_k lambdas[k] ops_A[k] (x) ops_B[k] with orthonormal Hermitian ops."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lambdas: np.ndarray
    ops_A: np.ndarray
    ops_B: np.ndarray

    @field_validator("lambdas", "ops_A", "ops_B", mode="before")
    @classmethod
    def _freeze(cls, v):
        arr = np.array(v)
        arr.setflags(write=False)
        return arr

    def reconstruct(self) -> np.ndarray:
        k = len(self.lambdas)
        return sum(
            self.lambdas[i] * np.kron(self.ops_A[i], self.ops_B[i]) for i in range(k)
        )


def correlation_matrix(rho: DensityMatrix, ops_A: np.ndarray, ops_B: np.ndarray):
    """[C]_ij = tr(rho ops_A[i] (x) ops_B[j]) for Hermitian operator lists.

    Raises:
        DimensionMismatchError: operator sizes do not match rho's dims
        InvariantViolation: an entry has imaginary part above 1e-8
    """
    dims = rho.dims
    ops_A, ops_B = np.asarray(ops_A), np.asarray(ops_B)
    if ops_A.shape[1:] != (dims.d_A, dims.d_A) or ops_B.shape[1:] != (
        dims.d_B,
        dims.d_B,
    ):
        raise DimensionMismatchError(
            f"operators of sizes {ops_A.shape[1:]} and {ops_B.shape[1:]} "
            f"do not act on a {dims} system"
        )
    r = rho.matrix.reshape(dims.d_A, dims.d_B, dims.d_A, dims.d_B)
    corr = np.einsum("xyuv,iux,jvy->ij", r, ops_A, ops_B)
    imag = float(np.max(np.abs(corr.imag)))
    if imag > CORRELATION_IMAG_TOL:
        raise InvariantViolation("real correlations", f"imag residue {imag:.3e}")
    return corr.real


def correlation_trace_norm(
    rho: DensityMatrix, ops_A: np.ndarray, ops_B: np.ndarray
) -> float:
    return trace_norm(correlation_matrix(rho, ops_A, ops_B))


def local_expectations(marginal: np.ndarray, ops: np.ndarray) -> np.ndarray:
    values = np.einsum("ij,kji->k", as_matrix(marginal), ops)
    return values.real


def ppt(rho: DensityMatrix) -> CriterionReport:
    value = -min_eigenvalue(partial_transpose(rho.matrix, rho.dims))
    return CriterionReport.linear("PPT", value, bound=0.0)


def operator_schmidt(rho: DensityMatrix) -> SchmidtDecomposition:
    """Operator Schmidt decomposition from the SVD of the realigned state.

    The realigned matrix is expressed in the canonical Hermitian operator
    bases of both sides, where it is real for Hermitian rho. Its real SVD
    then yields Hermitian Schmidt operators directly, and the full orthogonal
    factors complete the null directions to orthonormal bases.

    Raises:
        InvariantViolation: Hermitian-basis coefficients carry an imaginary
            part above 1e-6
    """
    dims = rho.dims
    basis_A = hermitian_basis(dims.d_A)
    basis_B = hermitian_basis(dims.d_B)
    w_A = basis_A.reshape(dims.d_A**2, dims.d_A**2).T
    w_B = basis_B.reshape(dims.d_B**2, dims.d_B**2).T
    coeffs = w_A.conj().T @ realign(rho.matrix, dims) @ w_B.conj()

    residual = float(np.max(np.abs(coeffs.imag)))
    if residual > HERMITIZATION_TOL:
        raise InvariantViolation("Hermitian Schmidt operators", f"{residual:.3e}")

    u, s, vt = np.linalg.svd(coeffs.real, full_matrices=True)
    ops_A = np.einsum("ak,aij->kij", u, basis_A)
    ops_B = np.einsum("kb,bij->kij", vt, basis_B)
    return SchmidtDecomposition(lambdas=s, ops_A=ops_A, ops_B=ops_B)


def ccnr(rho: DensityMatrix) -> CriterionReport:
    return CriterionReport.linear("CCNR", trace_norm(realign(rho.matrix, rho.dims)))


def _design_tag(nd_A: NormalizedDesign, nd_B: NormalizedDesign, family: str) -> str:
    if nd_A.kind == "sic" and nd_B.kind == "sic":
        return family[0] + "SIC"
    if nd_A.n == nd_B.n:
        return f"{family}2D(N={nd_A.n})"
    return f"{family}2D(N={nd_A.n},{nd_B.n})"


def linear_design_value(
    rho: DensityMatrix,
    nd_A: NormalizedDesign,
    nd_B: NormalizedDesign,
    criterion: Optional[str] = None,
) -> CriterionReport:
    """Trace norm of the normalized-design correlation matrix (ESIC / E2D)."""
    if nd_A.dim != rho.dims.d_A or nd_B.dim != rho.dims.d_B:
        raise DimensionMismatchError(
            f"designs of dimension ({nd_A.dim}, {nd_B.dim}) on a {rho.dims} state"
        )
    value = correlation_trace_norm(rho, nd_A.elements, nd_B.elements)
    return CriterionReport.linear(criterion or _design_tag(nd_A, nd_B, "E"), value)


def _require_balanced(rho: DensityMatrix, name: str) -> None:
    if not rho.dims.balanced:
        raise UnbalancedDimensionsError(
            f"{name} requires equal local dimensions, got {rho.dims}"
        )


def lur(rho: DensityMatrix, loo_state: Optional[DensityMatrix] = None):
    """Local uncertainty relation with Schmidt operators as LOOs.

    value = 1 - sum_k <G_k^A (x) G_k^B> - 1/2 sum_k <G_k^A (x) 1 - 1 (x) G_k^B>^2

    Args:
        rho: State under test
        loo_state: State whose Schmidt operators serve as LOOs; rho itself
            when omitted
    """
    _require_balanced(rho, "LUR")
    source = rho if loo_state is None else loo_state
    if source.dims != rho.dims:
        raise DimensionMismatchError("LOO state and tested state differ in dims")
    schmidt = operator_schmidt(source)
    ops_A, ops_B = schmidt.ops_A, schmidt.ops_B
    joint = np.trace(correlation_matrix(rho, ops_A, ops_B))
    a = local_expectations(rho.reduced("A"), ops_A)
    b = local_expectations(rho.reduced("B"), ops_B)
    value = 1.0 - joint - 0.5 * np.sum((a - b) ** 2)
    return CriterionReport.nonlinear(
        "LUR" if loo_state is None else "LUR(pure)", float(value)
    )


def nonlinear_design_value(
    rho: DensityMatrix, nd: NormalizedDesign, criterion: Optional[str] = None
) -> CriterionReport:
    """Design version of the LUR: LSIC for SICs, L2D otherwise.

    value = 1 + sum_k <Pi_k (x) Pi_k> - 1/2 sum_k (a_k + b_k)^2
    """
    _require_balanced(rho, "LSIC/L2D")
    if nd.dim != rho.dims.d_A:
        raise DimensionMismatchError(f"design of dimension {nd.dim} on {rho.dims}")
    joint = np.trace(correlation_matrix(rho, nd.elements, nd.elements))
    a = design_probabilities(rho.reduced("A"), nd)
    b = design_probabilities(rho.reduced("B"), nd)
    value = 1.0 + joint - 0.5 * np.sum((a + b) ** 2)
    return CriterionReport.nonlinear(
        criterion or _design_tag(nd, nd, "L"), float(value)
    )


def variance_sum(rho, nd: NormalizedDesign) -> float:
    """sum_k [tr(rho Pi_k^2) - tr(rho Pi_k)^2] for a single-system state."""
    m = as_matrix(rho)
    if m.shape != (nd.dim, nd.dim):
        raise DimensionMismatchError(
            f"expected a {nd.dim}x{nd.dim} state, got shape {m.shape}"
        )
    squares = np.einsum("kij,kjl->kil", nd.elements, nd.elements)
    second = np.einsum("ij,kji->k", m, squares).real
    first = design_probabilities(m, nd)
    return float(np.sum(second - first**2))
