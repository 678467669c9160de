import numpy as np
import pytest

from entdesign.core.errors import (
    DegenerateParametersError,
    DimensionMismatchError,
    InvariantViolation,
)
from entdesign.core.matcore import is_unitary, min_eigenvalue
from entdesign.core.states import (
    BELL_KINDS,
    QUBIT_QUTRIT,
    QUBITS,
    QUTRITS,
    DensityMatrix,
    RngStream,
    apply_local_unitaries,
    bell_state,
    bennett_upb_state,
    chessboard_parameters,
    chessboard_state,
    draw_npt_sample,
    horodecki_state,
    mix_with_white_noise,
    noisy_two_qubit,
    random_density_matrix,
    random_npt_sample,
    random_product_state,
    random_separable_mixture,
    random_unitary,
    separable_noise,
    upb_vectors,
)


def _stream(i, seed=2024):
    return RngStream(master_seed=seed, stream_index=i)


def test_density_matrix_is_frozen():
    """Test that the stored matrix cannot be modified"""
    rho = bell_state("phi_plus")
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


@pytest.mark.parametrize(
    "matrix",
    [
        np.diag([0.5, 0.5, 0.5, 0.5]),
        np.diag([1.5, -0.5, 0.0, 0.0]),
        np.array([[0.5, 0.1, 0, 0], [0.2, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]),
    ],
    ids=["trace", "positivity", "hermiticity"],
)
def test_density_matrix_invariants(matrix):
    """Test that invalid states raise InvariantViolation"""
    with pytest.raises(InvariantViolation):
        DensityMatrix(matrix=matrix, dims=QUBITS)


def test_density_matrix_shape_mismatch():
    """Test that the matrix size must match the dims"""
    with pytest.raises(ValueError):
        DensityMatrix(matrix=np.eye(4) / 4, dims=QUBIT_QUTRIT)


def test_reduced_and_purity():
    """Test marginals and purity of a Bell state"""
    rho = bell_state("psi_minus")
    assert np.allclose(rho.reduced("B"), np.eye(2) / 2)
    assert rho.purity() == pytest.approx(1.0)


@pytest.mark.parametrize("kind", BELL_KINDS)
def test_bell_states_are_npt(kind):
    """Test that every Bell state has partial transpose eigenvalue -1/2"""
    assert min_eigenvalue(bell_state(kind).partial_transpose()) == pytest.approx(-0.5)


def test_noisy_two_qubit_endpoints():
    """Test the endpoints of the noisy Bell family"""
    low, high = noisy_two_qubit("psi_minus", 0.0), noisy_two_qubit("psi_minus", 1.0)
    assert np.allclose(low.matrix, separable_noise().matrix)
    assert np.allclose(high.matrix, bell_state("psi_minus").matrix)


def test_noisy_two_qubit_is_affine():
    """Test that rho(p) = p rho(1) + (1 - p) rho(0)"""
    p = 0.37
    mixed = p * bell_state("phi_plus").matrix + (1 - p) * separable_noise().matrix
    assert np.allclose(noisy_two_qubit("phi_plus", p).matrix, mixed)


def test_noisy_two_qubit_rejects_bad_weight():
    """Test that the mixing weight must lie in [0, 1]"""
    with pytest.raises(ValueError):
        noisy_two_qubit("psi_plus", 1.5)


def test_unknown_bell_kind():
    """Test that unknown Bell labels are rejected"""
    with pytest.raises(ValueError):
        bell_state("psi_zero")


def test_white_noise_endpoint():
    """Test that p = 0 gives the maximally mixed state"""
    rho = mix_with_white_noise(bennett_upb_state(), 0.0)
    assert np.allclose(rho.matrix, np.eye(9) / 9)


def test_upb_vectors_are_orthonormal():
    """Test that the five UPB vectors are orthonormal"""
    v = upb_vectors()
    assert np.allclose(v.conj() @ v.T, np.eye(5))


def test_bennett_state_is_ppt_and_rank_four():
    """Test the tiles-UPB bound entangled state"""
    rho = bennett_upb_state()
    assert np.linalg.matrix_rank(rho.matrix, tol=1e-10) == 4
    assert min_eigenvalue(rho.partial_transpose()) >= -1e-12


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_horodecki_state_is_ppt(x):
    """Test that the Horodecki family is PPT"""
    rho = horodecki_state(x)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)
    assert min_eigenvalue(rho.partial_transpose()) >= -1e-12


@pytest.mark.parametrize("x", [0.0, 1.0, -0.2])
def test_horodecki_state_rejects_bad_parameter(x):
    """Test that x must lie in (0, 1)"""
    with pytest.raises(ValueError):
        horodecki_state(x)


def test_chessboard_state_is_ppt():
    """Test that chessboard samples are valid PPT states"""
    for i in range(20):
        rho = chessboard_state(chessboard_parameters(_stream(i)))
        assert rho.dims == QUTRITS
        assert min_eigenvalue(rho.partial_transpose()) >= -1e-9


def test_chessboard_state_rejects_degenerate_parameters():
    """Test that |v6| below the guard raises DegenerateParametersError"""
    with pytest.raises(DegenerateParametersError):
        chessboard_state([1.0, 1.0, 1.0, 1.0, 1.0, 0.0])


def test_chessboard_parameter_moments():
    """Test the mean and spread of the chessboard parameter draws"""
    draws = np.array([chessboard_parameters(_stream(i)) for i in range(5000)])
    assert abs(draws.mean()) < 0.05
    assert draws.std() == pytest.approx(2.0, abs=0.05)


def test_rng_stream_is_addressable():
    """Test that a stream is fixed by its seed and index"""
    a = _stream(3).generator().standard_normal(4)
    b = _stream(3).generator().standard_normal(4)
    c = _stream(4).generator().standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_density_matrix_is_deterministic():
    """Test that the same stream gives the same state"""
    a = random_density_matrix(QUBIT_QUTRIT, _stream(8))
    b = random_density_matrix(QUBIT_QUTRIT, _stream(8))
    assert np.array_equal(a.matrix, b.matrix)


def test_random_npt_samples():
    """Test that rejection sampling only returns NPT states"""
    for i in range(50):
        rho, draws = draw_npt_sample(QUBITS, _stream(i))
        assert draws >= 1
        assert min_eigenvalue(rho.partial_transpose()) < -1e-12
    rho = random_npt_sample(QUBIT_QUTRIT, _stream(99))
    assert min_eigenvalue(rho.partial_transpose()) < 0


def test_random_npt_sample_rejects_large_systems():
    """Test that NPT sampling is refused where NPT does not imply entanglement"""
    with pytest.raises(DimensionMismatchError):
        random_npt_sample(QUTRITS, _stream(0))


def test_npt_acceptance_rate():
    """Test the NPT fraction of Hilbert-Schmidt two-qubit states"""
    draws = sum(draw_npt_sample(QUBITS, _stream(i))[1] for i in range(3000))
    assert 3000 / draws == pytest.approx(0.757, abs=0.03)


def test_hilbert_schmidt_mean_purity():
    """Test E[tr rho^2] = 2d/(d^2+1) for d = 4"""
    purities = [random_density_matrix(QUBITS, _stream(i)).purity() for i in range(5000)]
    assert np.mean(purities) == pytest.approx(8.0 / 17.0, abs=0.01)


@pytest.mark.slow
def test_hilbert_schmidt_mean_purity_large_sample():
    """Test the Hilbert-Schmidt mean purity over 10^5 samples"""
    purities = [
        random_density_matrix(QUBITS, _stream(i)).purity() for i in range(100_000)
    ]
    assert np.mean(purities) == pytest.approx(8.0 / 17.0, abs=0.002)


def test_random_unitary():
    """Test that Haar draws are unitary"""
    assert is_unitary(random_unitary(3, _stream(1)))


def test_separable_generators_are_ppt():
    """Test that product states and separable mixtures are PPT"""
    for i in range(20):
        for rho in (
            random_product_state(QUTRITS, _stream(i)),
            random_separable_mixture(QUBIT_QUTRIT, _stream(i)),
        ):
            assert min_eigenvalue(rho.partial_transpose()) >= -1e-12


def test_local_unitaries_preserve_spectrum():
    """Test that U_A (x) U_B conjugation keeps the spectrum"""
    rho = random_density_matrix(QUBITS, _stream(5))
    moved = apply_local_unitaries(
        rho, random_unitary(2, _stream(6)), random_unitary(2, _stream(7))
    )
    assert np.allclose(
        np.linalg.eigvalsh(rho.matrix), np.linalg.eigvalsh(moved.matrix)
    )
