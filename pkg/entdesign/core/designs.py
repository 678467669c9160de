"""SIC POVMs and equal-weight quantum 2-designs.

A design is a set of N unit vectors |phi_k> in C^d whose second moment
(1/N) sum_k (|phi_k><phi_k|)^{(x)2} equals the Haar average
2 P_sym / (d(d+1)). Designs are built analytically (SICs), by minimizing the
frame potential, or by superimposing two designs; every constructor certifies its
output before returning it.
"""

import json
import logging
from typing import List, Literal, Sequence, Tuple

import numpy as np
import scipy.optimize
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from entdesign.core.errors import (
    ConvergenceError,
    DimensionMismatchError,
    InvariantViolation,
    NotUnitaryError,
    UnsupportedDimensionError,
)
from entdesign.core.matcore import as_matrix, is_unitary, symmetric_projector

logger = logging.getLogger("entdesign.designs")

DesignKind = Literal["sic", "optimized", "superimposed"]

UNIT_NORM_TOL = 1e-10
SIC_GRAM_TOL = 1e-12
COMPLETENESS_TOL = 1e-8
PROBABILITY_IMAG_TOL = 1e-10
FRAME_GAP_TOL = 1e-12

DESIGN_TOL = {"sic": 1e-8, "optimized": 1e-6, "superimposed": 1e-6}


def _frozen(v, dtype=complex) -> np.ndarray:
    arr = np.array(v, dtype=dtype)
    arr.setflags(write=False)
    return arr


class ProjectiveDesign(BaseModel):
    """N unit vectors in C^d, stored as the rows of `vectors`."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int
    n: int
    vectors: np.ndarray
    kind: DesignKind

    @field_validator("vectors", mode="before")
    @classmethod
    def _freeze(cls, v):
        return _frozen(v)

    @model_validator(mode="after")
    def _check_vectors(self):
        if self.vectors.shape != (self.n, self.dim):
            raise DimensionMismatchError(
                f"expected {self.n} vectors of dimension {self.dim}, "
                f"got array of shape {self.vectors.shape}"
            )
        deviation = unit_norm_deviation(self.vectors)
        if deviation > UNIT_NORM_TOL:
            raise InvariantViolation("unit norm", f"max deviation {deviation:.3e}")
        return self

    @property
    def projectors(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.vectors, self.vectors.conj())

    @property
    def tolerance(self) -> float:
        return DESIGN_TOL[self.kind]


class NormalizedDesign(BaseModel):
    """Rescaled design operators Pi_k = sqrt(d(d+1)/(2N)) |phi_k><phi_k|."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int
    n: int
    kind: DesignKind
    elements: np.ndarray

    @field_validator("elements", mode="before")
    @classmethod
    def _freeze(cls, v):
        return _frozen(v)

    @model_validator(mode="after")
    def _check_completeness(self):
        if self.elements.shape != (self.n, self.dim, self.dim):
            raise DimensionMismatchError(
                f"expected {self.n} operators of size {self.dim}, "
                f"got array of shape {self.elements.shape}"
            )
        squares = np.einsum("kij,kjl->il", self.elements, self.elements)
        residual = np.max(np.abs(squares - (self.dim + 1) / 2.0 * np.eye(self.dim)))
        if residual > COMPLETENESS_TOL:
            raise InvariantViolation(
                "sum_k Pi_k^2 = (d+1)/2 I", f"residual {residual:.3e}"
            )
        return self

    @property
    def label(self) -> str:
        return "SIC" if self.kind == "sic" else f"N={self.n}"


class DesignCertificate(BaseModel):
    dim: int
    n: int
    kind: str
    moment_residual: float
    frame_potential_gap: float
    unit_norm_deviation: float
    tolerance: float
    passed: bool


def unit_norm_deviation(vectors: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.norm(vectors, axis=1) - 1.0)))


def frame_potential(vectors: np.ndarray) -> float:
    """sum_{i,j} |<phi_i|phi_j>|^4."""
    vectors = np.asarray(vectors)
    gram = vectors.conj() @ vectors.T
    return float(np.sum(np.abs(gram) ** 4))


def frame_potential_bound(d: int, n: int) -> float:
    return 2.0 * n * n / (d * (d + 1))


def second_moment(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors)
    n, d = vectors.shape
    doubled = np.einsum("ki,kj->kij", vectors, vectors).reshape(n, d * d)
    return doubled.T @ doubled.conj() / n


def moment_residual(vectors: np.ndarray) -> float:
    """Frobenius distance of the second moment from 2 P_sym / (d(d+1))."""
    vectors = np.asarray(vectors)
    d = vectors.shape[1]
    haar = 2.0 * symmetric_projector(d) / (d * (d + 1))
    return float(np.linalg.norm(second_moment(vectors) - haar))


def verify_design(p: ProjectiveDesign) -> DesignCertificate:
    """Certify the unit norms and the second-moment condition of a design."""
    bound = frame_potential_bound(p.dim, p.n)
    residual = moment_residual(p.vectors)
    norm_dev = unit_norm_deviation(p.vectors)
    return DesignCertificate(
        dim=p.dim,
        n=p.n,
        kind=p.kind,
        moment_residual=residual,
        frame_potential_gap=(frame_potential(p.vectors) - bound) / bound,
        unit_norm_deviation=norm_dev,
        tolerance=p.tolerance,
        passed=bool(residual <= p.tolerance and norm_dev <= UNIT_NORM_TOL),
    )


def certify_design(p: ProjectiveDesign) -> ProjectiveDesign:
    cert = verify_design(p)
    if not cert.passed:
        raise InvariantViolation(
            "second-moment condition",
            f"{p.kind} design d={p.dim} N={p.n}: moment residual "
            f"{cert.moment_residual:.3e} > {cert.tolerance:.0e}",
        )
    logger.debug(
        "Certified %s design d=%d N=%d (moment residual %.3e)",
        p.kind,
        p.dim,
        p.n,
        cert.moment_residual,
    )
    return p


def _bloch_ket(n: Sequence[float]) -> np.ndarray:
    nx, ny, nz = n
    return np.array(
        [np.sqrt((1.0 + nz) / 2.0), (nx + 1j * ny) / np.sqrt(2.0 * (1.0 + nz))]
    )


def _weyl_heisenberg_orbit(fiducial: np.ndarray) -> np.ndarray:
    d = len(fiducial)
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    vectors = []
    for a in range(d):
        for b in range(d):
            op = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            vectors.append(op @ fiducial)
    return np.array(vectors)


def build_sic(d: int) -> ProjectiveDesign:
    """Analytic SIC POVM vectors for d = 2 (tetrahedron) and d = 3 (WH orbit)."""
    if d == 2:
        s = 1.0 / np.sqrt(3.0)
        bloch = [(s, s, s), (s, -s, -s), (-s, s, -s), (-s, -s, s)]
        vectors = np.array([_bloch_ket(n) for n in bloch])
    elif d == 3:
        fiducial = np.array([0.0, 1.0, -1.0], dtype=complex) / np.sqrt(2.0)
        vectors = _weyl_heisenberg_orbit(fiducial)
    else:
        raise UnsupportedDimensionError(
            f"analytic SICs exist here for d in {{2, 3}}, not {d}"
        )

    overlaps = np.abs(vectors.conj() @ vectors.T) ** 2
    expected = (d * np.eye(d * d) + 1.0) / (d + 1.0)
    gram_error = float(np.max(np.abs(overlaps - expected)))
    if gram_error > SIC_GRAM_TOL:
        raise InvariantViolation("SIC equal pairwise fidelity", f"{gram_error:.3e}")
    return certify_design(ProjectiveDesign(dim=d, n=d * d, vectors=vectors, kind="sic"))


def _potential_and_gradient(phi: np.ndarray) -> Tuple[float, np.ndarray]:
    gram = phi.conj() @ phi.T
    abs2 = np.abs(gram) ** 2
    potential = float(np.sum(abs2**2))
    # Wirtinger gradient with respect to conj(phi_i), projected on the sphere
    grad = 4.0 * (abs2 * gram.conj()) @ phi
    radial = np.real(np.sum(phi.conj() * grad, axis=1, keepdims=True))
    return potential, grad - radial * phi


def _retract(phi: np.ndarray) -> np.ndarray:
    return phi / np.linalg.norm(phi, axis=1, keepdims=True)


def _pack(phi: np.ndarray) -> np.ndarray:
    return np.concatenate([phi.real.ravel(), phi.imag.ravel()])


def _unpack(x: np.ndarray, n: int, d: int) -> np.ndarray:
    return (x[: n * d] + 1j * x[n * d :]).reshape(n, d)


def _objective(x: np.ndarray, n: int, d: int) -> Tuple[float, np.ndarray]:
    """Frame potential gap of the normalized rows of x and its real gradient.

    The gap equals N^2 times the squared moment residual on unit vectors and is
    evaluated in that form, which keeps its precision near zero.
    """
    psi = _unpack(x, n, d)
    norms = np.linalg.norm(psi, axis=1, keepdims=True)
    phi = psi / norms
    _, grad = _potential_and_gradient(phi)
    gap = (n * moment_residual(phi)) ** 2
    # d(phi)/d(psi) is the tangent projection scaled by 1/|psi|
    return gap, _pack(2.0 * grad / norms)


def optimize_design(
    d: int,
    n: int,
    seed: int,
    max_iters: int = 50_000,
    restarts: int = 20,
    tol: float = DESIGN_TOL["optimized"],
) -> ProjectiveDesign:
    """Find a 2-design of n vectors by minimizing the frame potential.

    Each restart runs L-BFGS-B from random Gaussian vectors until the line
    search stalls at rounding level.

    Args:
        d: Dimension
        n: Number of vectors, at least d^2
        seed: Seed of the random starting points; restart r uses spawn key r
        max_iters: Iteration cap per restart
        restarts: Number of random starts tried before giving up
        tol: Second-moment residual declared converged

    Returns:
        A certified design of kind "optimized"

    Raises:
        ConvergenceError: no restart reached the bound; carries the best
            frame potential and vectors seen
    """
    if d < 2:
        raise UnsupportedDimensionError(f"dimension must be >= 2, got {d}")
    if n < d * d:
        raise ValueError(f"a 2-design in d={d} needs N >= {d * d}, got {n}")

    bound = frame_potential_bound(d, n)
    best_residual, best_phi = np.inf, None
    for restart in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        start = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        result = scipy.optimize.minimize(
            _objective,
            _pack(_retract(start)),
            args=(n, d),
            method="L-BFGS-B",
            jac=True,
            options={"maxiter": max_iters, "ftol": 0.0, "gtol": 0.0},
        )
        phi = _retract(_unpack(result.x, n, d))
        residual = moment_residual(phi)
        gap = (frame_potential(phi) - bound) / bound
        logger.debug(
            "Design d=%d N=%d restart %d: residual %.3e after %d iterations (%s)",
            d,
            n,
            restart,
            residual,
            result.nit,
            result.message,
        )
        if residual <= tol and gap <= FRAME_GAP_TOL:
            logger.info(
                "Found 2-design d=%d N=%d (restart %d, %d iterations)",
                d,
                n,
                restart,
                result.nit,
            )
            design = ProjectiveDesign(dim=d, n=n, vectors=phi, kind="optimized")
            return certify_design(design)
        if residual < best_residual:
            best_residual, best_phi = residual, phi

    best_potential = frame_potential(best_phi)
    raise ConvergenceError(
        f"no 2-design with d={d}, N={n} after {restarts} restarts; best frame "
        f"potential {best_potential:.12f} vs bound {bound:.12f}",
        best_value=best_potential,
        best_vectors=best_phi,
    )


def superimpose(
    a: ProjectiveDesign, b: ProjectiveDesign, rotation: np.ndarray
) -> ProjectiveDesign:
    """Union of a and the rotated b, with equal weights on all vectors."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cannot superimpose d={a.dim} and d={b.dim}")
    rotation = np.asarray(rotation, dtype=complex)
    if rotation.shape != (a.dim, a.dim) or not is_unitary(rotation):
        raise NotUnitaryError("rotation must be a unitary of the design dimension")
    vectors = np.vstack([a.vectors, b.vectors @ rotation.T])
    design = ProjectiveDesign(
        dim=a.dim, n=a.n + b.n, vectors=vectors, kind="superimposed"
    )
    return certify_design(design)


def normalize_design(p: ProjectiveDesign) -> NormalizedDesign:
    scale = np.sqrt(p.dim * (p.dim + 1) / (2.0 * p.n))
    return NormalizedDesign(
        dim=p.dim, n=p.n, kind=p.kind, elements=scale * p.projectors
    )


def _state_matrix(rho, d: int) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape != (d, d):
        raise DimensionMismatchError(f"expected a {d}x{d} state, got shape {m.shape}")
    return m


def design_probabilities(rho, nd: NormalizedDesign) -> np.ndarray:
    """p_k = tr(rho Pi_k) for a single-system state rho."""
    m = _state_matrix(rho, nd.dim)
    probs = np.einsum("ij,kji->k", m, nd.elements)
    imag = float(np.max(np.abs(probs.imag)))
    if imag > PROBABILITY_IMAG_TOL:
        raise InvariantViolation("real design probabilities", f"imag {imag:.3e}")
    return probs.real


def povm_probabilities(rho, p: ProjectiveDesign) -> np.ndarray:
    """Born probabilities of the POVM (d/N)|phi_k><phi_k|."""
    m = _state_matrix(rho, p.dim)
    overlaps = np.einsum("ki,ij,kj->k", p.vectors.conj(), m, p.vectors)
    return (p.dim / p.n) * overlaps.real


def reconstruct_state(probs: Sequence[float], p: ProjectiveDesign) -> np.ndarray:
    """rho = (d+1)(N/d) sum_k p_k (d/N)|phi_k><phi_k| - I."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (p.n,):
        raise DimensionMismatchError(f"expected {p.n} probabilities, got {probs.shape}")
    povm = (p.dim / p.n) * p.projectors
    weighted = np.einsum("k,kij->ij", probs, povm)
    return (p.dim + 1) * (p.n / p.dim) * weighted - np.eye(p.dim)


class DesignFile(BaseModel):
    """On-disk form of a design: vectors as [[re, im], ...] rows."""

    dim: int
    n: int
    kind: DesignKind
    vectors: List[List[Tuple[float, float]]]


def design_to_dict(p: ProjectiveDesign) -> dict:
    return {
        "dim": p.dim,
        "n": p.n,
        "kind": p.kind,
        "vectors": [[[float(z.real), float(z.imag)] for z in row] for row in p.vectors],
    }


def design_from_dict(data: dict) -> ProjectiveDesign:
    record = DesignFile.model_validate(data)
    raw = np.array(record.vectors, dtype=float)
    if raw.ndim != 3:
        raise DimensionMismatchError("design vectors must be a non-empty N x d list")
    vectors = raw[..., 0] + 1j * raw[..., 1]
    design = ProjectiveDesign(
        dim=record.dim, n=record.n, vectors=vectors, kind=record.kind
    )
    return certify_design(design)


def save_design(p: ProjectiveDesign, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(design_to_dict(p), f, indent=2)
    logger.info("Wrote %s design d=%d N=%d to %s", p.kind, p.dim, p.n, path)


def load_design(path: str) -> ProjectiveDesign:
    with open(path, "r", encoding="utf-8") as f:
        return design_from_dict(json.load(f))
