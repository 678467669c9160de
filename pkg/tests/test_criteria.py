import numpy as np
import pytest

from entdesign.core.criteria import (
    CriterionReport,
    ccnr,
    correlation_matrix,
    linear_design_value,
    lur,
    nonlinear_design_value,
    operator_schmidt,
    ppt,
    variance_sum,
)
from entdesign.core.designs import build_sic, normalize_design, superimpose
from entdesign.core.errors import DimensionMismatchError, UnbalancedDimensionsError
from entdesign.core.matcore import hermitian_basis, is_hermitian, realign, trace_norm
from entdesign.core.states import (
    QUBIT_QUTRIT,
    QUBITS,
    DensityMatrix,
    RngStream,
    apply_local_unitaries,
    bell_state,
    bennett_upb_state,
    noisy_two_qubit,
    random_density_matrix,
    random_product_state,
    random_pure_state,
    random_unitary,
)
from entdesign.harness.thresholds import find_threshold


def _stream(i, seed=77):
    return RngStream(master_seed=seed, stream_index=i)


@pytest.fixture(scope="module")
def sic2():
    return normalize_design(build_sic(2))


@pytest.fixture(scope="module")
def sic3():
    return normalize_design(build_sic(3))


@pytest.fixture(scope="module")
def design8():
    sic = build_sic(2)
    return normalize_design(superimpose(sic, sic, random_unitary(2, _stream(0))))


def test_report_margins():
    """Test margin and verdict of linear and nonlinear reports"""
    linear = CriterionReport.linear("CCNR", 1.2)
    nonlinear = CriterionReport.nonlinear("LUR", 0.3)
    assert linear.margin == pytest.approx(0.2)
    assert linear.entangled
    assert nonlinear.margin == pytest.approx(-0.3)
    assert not nonlinear.entangled
    assert not CriterionReport.linear("CCNR", 1.0 + 1e-12).entangled


def test_ppt():
    """Test PPT on a Bell state, the UPB state and white noise"""
    report = ppt(bell_state("phi_plus"))
    assert report.value == pytest.approx(0.5)
    assert report.entangled
    assert not ppt(bennett_upb_state()).entangled
    assert not ppt(DensityMatrix(matrix=np.eye(4) / 4, dims=QUBITS)).entangled


def test_schmidt_of_bell_state():
    """Test that a Bell projector has four Schmidt coefficients 1/2"""
    assert np.allclose(operator_schmidt(bell_state("phi_plus")).lambdas, 0.5)


def test_schmidt_of_product_state():
    """Test that a product state has a single Schmidt coefficient"""
    rho = random_product_state(QUBIT_QUTRIT, _stream(1))
    a, b = rho.reduced("A"), rho.reduced("B")
    expected = np.sqrt(np.trace(a @ a).real * np.trace(b @ b).real)
    lambdas = operator_schmidt(rho).lambdas
    assert len(lambdas) == 4
    assert lambdas[0] == pytest.approx(expected)
    assert np.allclose(lambdas[1:], 0.0, atol=1e-10)


def test_schmidt_operators_are_orthonormal_and_reconstruct():
    """Test orthonormality, Hermiticity and reconstruction of Schmidt operators"""
    rho = random_density_matrix(QUBIT_QUTRIT, _stream(2))
    schmidt = operator_schmidt(rho)
    for ops, d in ((schmidt.ops_A, 2), (schmidt.ops_B, 3)):
        assert ops.shape == (d * d, d, d)
        assert np.allclose(np.einsum("kij,lji->kl", ops, ops), np.eye(d * d))
        assert all(is_hermitian(op, 1e-8) for op in ops)
    assert np.allclose(schmidt.reconstruct(), rho.matrix, atol=1e-8)
    assert np.sum(schmidt.lambdas) == pytest.approx(
        trace_norm(realign(rho.matrix, rho.dims)), abs=1e-9
    )


def test_ccnr_values():
    """Test CCNR on white noise and at the noisy singlet threshold"""
    white = DensityMatrix(matrix=np.eye(4) / 4, dims=QUBITS)
    assert ccnr(white).value == pytest.approx(0.5)
    assert not ccnr(white).entangled
    for kind, p in (("psi_minus", 0.2918), ("phi_plus", 0.2164)):
        assert ccnr(noisy_two_qubit(kind, p)).value == pytest.approx(1.0, abs=2e-3)


def test_correlation_matrix_rejects_wrong_operators():
    """Test that operator sizes must match the state"""
    rho = bell_state("psi_plus")
    with pytest.raises(DimensionMismatchError):
        correlation_matrix(rho, hermitian_basis(3), hermitian_basis(2))


def test_esic_at_threshold(sic2, design8):
    """Test ESIC at the noisy singlet threshold and its design independence"""
    rho = noisy_two_qubit("psi_minus", 0.2678)
    esic = linear_design_value(rho, sic2, sic2)
    e2d = linear_design_value(rho, design8, design8)
    assert esic.criterion == "ESIC"
    assert e2d.criterion == "E2D(N=8)"
    assert esic.value == pytest.approx(1.0, abs=2e-3)
    assert e2d.value == pytest.approx(esic.value, abs=1e-6)


def test_esic_on_pure_product_state(sic2, sic3):
    """Test that pure product states saturate the linear bound"""
    a = random_pure_state(2, _stream(3))
    b = random_pure_state(3, _stream(4))
    rho = DensityMatrix.from_vector(np.kron(a, b), QUBIT_QUTRIT)
    report = linear_design_value(rho, sic2, sic3)
    assert report.value == pytest.approx(1.0, abs=1e-10)
    assert not report.entangled


def test_linear_design_value_rejects_wrong_design(sic3):
    """Test that the design dimensions must match the state"""
    with pytest.raises(DimensionMismatchError):
        linear_design_value(bell_state("psi_minus"), sic3, sic3)


def test_lur_at_thresholds():
    """Test per-state LUR at the psi-plus threshold and pure-state LUR at psi-minus"""
    rho = noisy_two_qubit("psi_plus", 0.2779)
    assert lur(rho).value == pytest.approx(0.0, abs=2e-3)
    pure = bell_state("psi_minus")
    rho = noisy_two_qubit("psi_minus", 0.2501)
    assert lur(rho, loo_state=pure).value == pytest.approx(0.0, abs=2e-3)


def test_lur_threshold_equal_on_psi_minus_and_psi_plus():
    """Test that per-state LUR gives the Z-rotated singlet family the same threshold"""
    minus = find_threshold(lambda p: noisy_two_qubit("psi_minus", p), lur, tol=1e-5)
    plus = find_threshold(lambda p: noisy_two_qubit("psi_plus", p), lur, tol=1e-5)
    assert minus.threshold == pytest.approx(plus.threshold, abs=2e-5)
    assert plus.threshold == pytest.approx(0.2778, abs=1e-3)


def test_lur_with_pure_state_loos():
    """Test that LUR can take its LOOs from another state"""
    rho = noisy_two_qubit("phi_minus", 0.5)
    report = lur(rho, loo_state=bell_state("phi_minus"))
    assert report.criterion == "LUR(pure)"
    assert report.entangled


def test_lur_on_product_state():
    """Test that LUR does not flag a product state"""
    rho = random_product_state(QUBITS, _stream(5))
    assert lur(rho).value >= -1e-9


def test_lur_dominates_ccnr():
    """Test that LUR flags every state CCNR flags"""
    for i in range(100):
        rho = random_density_matrix(QUBITS, _stream(100 + i))
        assert lur(rho).margin >= ccnr(rho).margin - 1e-12


def test_nonlinear_criteria_require_balanced_dims(sic2):
    """Test that LUR and LSIC refuse unbalanced systems"""
    rho = random_density_matrix(QUBIT_QUTRIT, _stream(6))
    with pytest.raises(UnbalancedDimensionsError):
        lur(rho)
    with pytest.raises(UnbalancedDimensionsError):
        nonlinear_design_value(rho, sic2)


def test_lsic_values(sic2, design8):
    """Test LSIC on white noise, at the singlet threshold and on psi-plus"""
    white = DensityMatrix(matrix=np.eye(4) / 4, dims=QUBITS)
    assert nonlinear_design_value(white, sic2).value == pytest.approx(0.25)
    rho = noisy_two_qubit("psi_minus", 0.2501)
    lsic = nonlinear_design_value(rho, sic2)
    l2d = nonlinear_design_value(rho, design8)
    assert lsic.criterion == "LSIC"
    assert l2d.criterion == "L2D(N=8)"
    assert lsic.value == pytest.approx(0.0, abs=2e-3)
    assert l2d.value == pytest.approx(lsic.value, abs=1e-6)
    for p in (0.25, 0.5, 0.75, 1.0):
        rho = noisy_two_qubit("psi_plus", p)
        assert not nonlinear_design_value(rho, sic2).entangled


def test_variance_sum(sic2, sic3):
    """Test the variance sum on pure and maximally mixed states"""
    psi = random_pure_state(3, _stream(7))
    assert variance_sum(np.outer(psi, psi.conj()), sic3) == pytest.approx(1.0)
    assert variance_sum(np.eye(2) / 2, sic2) == pytest.approx(0.75)
    with pytest.raises(DimensionMismatchError):
        variance_sum(np.eye(3) / 3, sic2)


@pytest.mark.parametrize("criterion", [ppt, ccnr, lur])
def test_local_unitary_invariance(criterion, sic2):
    """Test that criterion values are invariant under local unitaries"""
    rho = random_density_matrix(QUBITS, _stream(8))
    moved = apply_local_unitaries(
        rho, random_unitary(2, _stream(9)), random_unitary(2, _stream(10))
    )
    assert criterion(moved).value == pytest.approx(criterion(rho).value, abs=1e-8)
    esic = linear_design_value(rho, sic2, sic2).value
    assert linear_design_value(moved, sic2, sic2).value == pytest.approx(esic, abs=1e-8)
