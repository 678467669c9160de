"""State families of the experiments plus seeded random ensembles."""

import logging
from typing import Literal, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from entdesign.core.errors import (
    DegenerateParametersError,
    DimensionMismatchError,
    InvariantViolation,
)
from entdesign.core.matcore import (
    HERMITIAN_TOL,
    BipartiteDims,
    hermiticity_residual,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    purity,
)

logger = logging.getLogger("entdesign.states")

BellKind = Literal["psi_minus", "psi_plus", "phi_minus", "phi_plus"]

BELL_KINDS: Tuple[str, ...] = ("psi_minus", "psi_plus", "phi_minus", "phi_plus")

TRACE_TOL = 1e-10
PSD_TOL = 1e-10
CHESSBOARD_EPS = 1e-6
CHESSBOARD_SIGMA = 2.0
NPT_TOL = 1e-12
PPT_CHECK_TOL = 1e-9

QUBITS = BipartiteDims(d_A=2, d_B=2)
QUTRITS = BipartiteDims(d_A=3, d_B=3)
QUBIT_QUTRIT = BipartiteDims(d_A=2, d_B=3)


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace, positive matrix with bipartite labels.

    The matrix is copied and frozen at construction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    dims: BipartiteDims

    @field_validator("matrix", mode="before")
    @classmethod
    def _freeze(cls, v):
        arr = np.array(v, dtype=complex)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_state(self):
        m = self.matrix
        if m.shape != (self.dims.total, self.dims.total):
            raise DimensionMismatchError(
                f"matrix shape {m.shape} does not match dims {self.dims}"
            )
        residual = hermiticity_residual(m)
        if residual > HERMITIAN_TOL:
            raise InvariantViolation("hermiticity", f"residual {residual:.3e}")
        trace = np.real(np.trace(m))
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvariantViolation("unit trace", f"trace {trace:.12f}")
        lowest = min_eigenvalue(m)
        if lowest < -PSD_TOL:
            raise InvariantViolation("positivity", f"min eigenvalue {lowest:.3e}")
        return self

    @classmethod
    def from_vector(cls, psi: np.ndarray, dims: BipartiteDims) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(matrix=np.outer(psi, psi.conj()), dims=dims)

    @property
    def dim(self) -> int:
        return self.dims.total

    def reduced(self, keep: str = "A") -> np.ndarray:
        return partial_trace(self.matrix, self.dims, keep)

    def partial_transpose(self) -> np.ndarray:
        return partial_transpose(self.matrix, self.dims)

    def purity(self) -> float:
        return purity(self.matrix)


class RngStream(BaseModel):
    """Addressable random stream.

    The pair (master_seed, stream_index) fixes the draws, independently of
    which worker consumes the stream or in which order.
    """

    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(ge=0, lt=2**64)
    stream_index: int = Field(ge=0)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))


RandomSource = Union[RngStream, np.random.Generator]


def _rng(source: RandomSource) -> np.random.Generator:
    if isinstance(source, np.random.Generator):
        return source
    return source.generator()


def _check_weight(p: float, name: str = "p") -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return float(p)


def bell_vector(kind: BellKind) -> np.ndarray:
    s = 1.0 / np.sqrt(2.0)
    vectors = {
        "psi_minus": [0.0, s, -s, 0.0],
        "psi_plus": [0.0, s, s, 0.0],
        "phi_minus": [s, 0.0, 0.0, -s],
        "phi_plus": [s, 0.0, 0.0, s],
    }
    if kind not in vectors:
        raise ValueError(f"unknown Bell state {kind!r}, expected one of {BELL_KINDS}")
    return np.array(vectors[kind], dtype=complex)


def bell_state(kind: BellKind) -> DensityMatrix:
    return DensityMatrix.from_vector(bell_vector(kind), QUBITS)


def separable_noise() -> DensityMatrix:
    """2/3 |00><00| + 1/3 |01><01|."""
    return DensityMatrix(matrix=np.diag([2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]), dims=QUBITS)


def noisy_two_qubit(kind: BellKind, p: float) -> DensityMatrix:
    """p |psi><psi| + (1 - p) rho_s for a Bell state psi."""
    p = _check_weight(p)
    matrix = p * bell_state(kind).matrix + (1.0 - p) * separable_noise().matrix
    return DensityMatrix(matrix=matrix, dims=QUBITS)


def mix_with_white_noise(rho: DensityMatrix, p: float) -> DensityMatrix:
    """p rho + (1 - p) I/d."""
    p = _check_weight(p)
    d = rho.dim
    return DensityMatrix(
        matrix=p * rho.matrix + (1.0 - p) * np.eye(d) / d, dims=rho.dims
    )


def upb_vectors() -> np.ndarray:
    """The five orthogonal product vectors of the 3x3 tiles UPB, as rows."""
    e = np.eye(3)
    minus01 = (e[0] - e[1]) / np.sqrt(2.0)
    minus12 = (e[1] - e[2]) / np.sqrt(2.0)
    uniform = (e[0] + e[1] + e[2]) / np.sqrt(3.0)
    return np.array(
        [
            np.kron(e[0], minus01),
            np.kron(minus01, e[2]),
            np.kron(e[2], minus12),
            np.kron(minus12, e[0]),
            np.kron(uniform, uniform),
        ],
        dtype=complex,
    )


def bennett_upb_state() -> DensityMatrix:
    """(I - sum_i |psi_i><psi_i|)/4, a rank-4 PPT entangled state."""
    vectors = upb_vectors()
    projector = sum(np.outer(v, v.conj()) for v in vectors)
    return DensityMatrix(matrix=(np.eye(9) - projector) / 4.0, dims=QUTRITS)


def _check_ppt(rho: DensityMatrix, family: str) -> DensityMatrix:
    lowest = min_eigenvalue(rho.partial_transpose())
    if lowest < -PPT_CHECK_TOL:
        raise InvariantViolation(
            f"{family} is PPT", f"partial transpose min eigenvalue {lowest:.3e}"
        )
    return rho


def chessboard_vectors(v: Sequence[float], eps: float = CHESSBOARD_EPS) -> np.ndarray:
    v1, v2, v3, v4, v5, v6 = (float(x) for x in v)
    if abs(v5) < eps or abs(v6) < eps:
        raise DegenerateParametersError(
            f"chessboard parameters need |v5|, |v6| >= {eps}, got v5={v5}, v6={v6}"
        )
    return np.array(
        [
            [v5, 0, v1 * v3 / v6, 0, v6, 0, 0, 0, 0],
            [0, v1, 0, v2, 0, v3, 0, 0, 0],
            [v6, 0, 0, 0, -v5, 0, v1 * v4 / v5, 0, 0],
            [0, v2, 0, -v1, 0, 0, 0, v4, 0],
        ]
    )


def chessboard_state(v: Sequence[float], eps: float = CHESSBOARD_EPS) -> DensityMatrix:
    """Normalized sum of the four chessboard projectors |V_j><V_j|.

    Raises:
        DegenerateParametersError: |v5| or |v6| below eps
        InvariantViolation: the sample fails the PPT check
    """
    vectors = chessboard_vectors(v, eps)
    unnormalized = vectors.T @ vectors
    rho = DensityMatrix(matrix=unnormalized / np.trace(unnormalized), dims=QUTRITS)
    return _check_ppt(rho, "chessboard state")


def horodecki_state(x: float) -> DensityMatrix:
    """The 3x3 Horodecki bound entangled state with parameter 0 < x < 1."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    m = np.zeros((9, 9))
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            m[i, j] = x
    for i in (1, 2, 3, 5, 7):
        m[i, i] = x
    a = (1.0 + x) / 2.0
    b = np.sqrt(1.0 - x**2) / 2.0
    m[6, 6] = a
    m[8, 8] = a
    m[6, 8] = m[8, 6] = b
    return DensityMatrix(matrix=m / (8.0 * x + 1.0), dims=QUTRITS)


def _ginibre(d: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(
        2.0
    )


def _hs_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    g = _ginibre(d, rng)
    w = g @ g.conj().T
    w = (w + w.conj().T) / 2.0
    return w / np.real(np.trace(w))


def random_density_matrix(dims: BipartiteDims, stream: RandomSource) -> DensityMatrix:
    """Hilbert-Schmidt random state G G^dagger / tr(G G^dagger)."""
    return DensityMatrix(matrix=_hs_matrix(dims.total, _rng(stream)), dims=dims)


def draw_npt_sample(
    dims: BipartiteDims, stream: RandomSource, max_draws: int = 10_000
) -> Tuple[DensityMatrix, int]:
    """Rejection sample NPT states; also return the number of draws used."""
    rng = _rng(stream)
    for draws in range(1, max_draws + 1):
        rho = random_density_matrix(dims, rng)
        if min_eigenvalue(rho.partial_transpose()) < -NPT_TOL:
            return rho, draws
    raise RuntimeError(f"no NPT state found in {max_draws} draws for dims {dims}")


def check_npt_dims(dims: BipartiteDims) -> None:
    if dims.total > 6:
        raise DimensionMismatchError(
            f"NPT sampling certifies entanglement only for 2x2 and 2x3, got {dims}"
        )


def random_npt_sample(dims: BipartiteDims, stream: RandomSource) -> DensityMatrix:
    check_npt_dims(dims)
    return draw_npt_sample(dims, stream)[0]


def chessboard_parameters(
    stream: RandomSource, eps: float = CHESSBOARD_EPS
) -> np.ndarray:
    """Six N(0, 2^2) draws, redrawn while |v5| or |v6| is below eps."""
    rng = _rng(stream)
    while True:
        v = rng.normal(0.0, CHESSBOARD_SIGMA, size=6)
        if abs(v[4]) >= eps and abs(v[5]) >= eps:
            return v
        logger.debug("Redrawing degenerate chessboard parameters %s", v)


def random_pure_state(d: int, stream: RandomSource) -> np.ndarray:
    rng = _rng(stream)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)


def random_unitary(d: int, stream: RandomSource) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(_ginibre(d, _rng(stream)))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_product_state(dims: BipartiteDims, stream: RandomSource) -> DensityMatrix:
    rng = _rng(stream)
    rho_a = _hs_matrix(dims.d_A, rng)
    rho_b = _hs_matrix(dims.d_B, rng)
    return DensityMatrix(matrix=np.kron(rho_a, rho_b), dims=dims)


def random_separable_mixture(
    dims: BipartiteDims, stream: RandomSource, max_terms: int = 8
) -> DensityMatrix:
    """Dirichlet-weighted mixture of 1..max_terms random product states."""
    rng = _rng(stream)
    terms = int(rng.integers(1, max_terms + 1))
    weights = rng.dirichlet(np.ones(terms))
    matrix = np.zeros((dims.total, dims.total), dtype=complex)
    for w in weights:
        matrix += w * random_product_state(dims, rng).matrix
    return DensityMatrix(matrix=matrix, dims=dims)


def apply_local_unitaries(
    rho: DensityMatrix, u_a: np.ndarray, u_b: np.ndarray
) -> DensityMatrix:
    u = np.kron(u_a, u_b)
    matrix = u @ rho.matrix @ u.conj().T
    return DensityMatrix(matrix=(matrix + matrix.conj().T) / 2.0, dims=rho.dims)
