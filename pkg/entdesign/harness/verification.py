"""Self-checks of every module, collected into one VerificationReport.

Each check draws from its own range of RngStream indices, and details carry
residuals but never timestamps, so two runs with the same seed produce
identical reports.
"""

import logging
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from entdesign.config import HarnessConfig
from entdesign.core.criteria import (
    VERDICT_TOL,
    ccnr,
    lur,
    operator_schmidt,
    variance_sum,
)
from entdesign.core.designs import (
    FRAME_GAP_TOL,
    NormalizedDesign,
    ProjectiveDesign,
    design_probabilities,
    load_design,
    optimize_design,
    povm_probabilities,
    reconstruct_state,
    verify_design,
)
from entdesign.core.errors import ConvergenceError, InvariantViolation
from entdesign.core.matcore import (
    BipartiteDims,
    realign,
    symmetric_projector,
    trace_norm,
)
from entdesign.core.states import (
    QUBIT_QUTRIT,
    QUBITS,
    QUTRITS,
    RngStream,
    apply_local_unitaries,
    random_density_matrix,
    random_product_state,
    random_pure_state,
    random_separable_mixture,
    random_unitary,
)
from entdesign.harness.suite import CriterionSuite
from entdesign.harness.thresholds import (
    certify_threshold,
    find_threshold,
    noisy_bell_family,
)
from entdesign.utils.common_utils import InvariantCheck, VerificationReport

logger = logging.getLogger("entdesign.harness")

IDENTITY_TOL = 1e-8
SCHMIDT_TOL = 1e-9
EQUIVALENCE_TOL = 1e-6
LOCAL_UNITARY_TOL = 1e-8

PURE_SAMPLES = 50
RECONSTRUCTION_SAMPLES = 100
SCHMIDT_SAMPLES = 200
LOCAL_UNITARY_SAMPLES = 50

OPTIMIZED_CASES = ((2, 4), (2, 7), (2, 9), (3, 9), (3, 18))

# disjoint stream ranges, one per check
_IDENTITY_STREAMS = 1_000_000
_SCHMIDT_STREAMS = 2_000_000
_EQUIVALENCE_STREAMS = 3_000_000
_CONTROL_STREAMS = 4_000_000
_UNITARY_STREAMS = 5_000_000


def _streams(seed: int, offset: int, count: int) -> Iterable[RngStream]:
    for i in range(count):
        yield RngStream(master_seed=seed, stream_index=offset + i)


def _single_state(d: int, stream: RngStream) -> np.ndarray:
    # marginal of a Hilbert-Schmidt state on C^d (x) C^2, full rank almost surely
    return random_density_matrix(BipartiteDims(d_A=d, d_B=2), stream).reduced("A")


def _bounded(
    name: str, worst: float, tol: float, unit: str = "max residual"
) -> InvariantCheck:
    return InvariantCheck(
        name=name,
        passed=bool(worst <= tol),
        detail=f"{unit} {worst:.3e} (tol {tol:.0e})",
    )


def _guarded(
    name: str, run: Callable[[], List[InvariantCheck]]
) -> List[InvariantCheck]:
    try:
        return run()
    except (InvariantViolation, ConvergenceError, ValueError) as e:
        logger.error("%s aborted: %s", name, e)
        return [InvariantCheck(name=name, passed=False, detail=str(e))]


def check_designs(
    config: HarnessConfig, suite: CriterionSuite
) -> List[InvariantCheck]:
    """Certificates of the suite's designs and of freshly optimized ones."""
    checks = [
        InvariantCheck(
            name=f"design certificate {cert.kind} d={cert.dim} N={cert.n}",
            passed=cert.passed,
            detail=f"moment residual {cert.moment_residual:.3e}",
        )
        for cert in suite.certificates
    ]
    for d, n in OPTIMIZED_CASES:
        name = f"optimized design d={d} N={n}"

        def run(d=d, n=n, name=name):
            cert = verify_design(optimize_design(d, n, config.design_seed))
            return [
                InvariantCheck(
                    name=name,
                    passed=cert.passed and cert.frame_potential_gap <= FRAME_GAP_TOL,
                    detail=(
                        f"moment residual {cert.moment_residual:.3e}, "
                        f"frame potential gap {cert.frame_potential_gap:.3e}"
                    ),
                )
            ]

        checks.extend(_guarded(name, run))
    return checks


def _design_identities(
    config: HarnessConfig, nd: NormalizedDesign
) -> List[InvariantCheck]:
    d = nd.dim
    tag = f"d={d} {nd.label}"
    squares = np.einsum("kij,kjl->il", nd.elements, nd.elements)
    doubled = np.einsum("kij,kab->iajb", nd.elements, nd.elements)
    doubled = doubled.reshape(d * d, d * d)

    purity_gap = shortfall = 0.0
    for stream in _streams(config.seed, _IDENTITY_STREAMS, config.identity_samples):
        rho = _single_state(d, stream)
        probs = design_probabilities(rho, nd)
        target = (1.0 + np.real(np.trace(rho @ rho))) / 2.0
        purity_gap = max(purity_gap, abs(np.sum(probs**2) - target))
        shortfall = max(shortfall, (d - 1) / 2.0 - variance_sum(rho, nd))

    pure_gap = 0.0
    for stream in _streams(config.seed, _IDENTITY_STREAMS, PURE_SAMPLES):
        psi = random_pure_state(d, stream)
        pure = np.outer(psi, psi.conj())
        pure_gap = max(pure_gap, abs(variance_sum(pure, nd) - (d - 1) / 2.0))

    return [
        _bounded(
            f"sum Pi^2 = (d+1)/2 I [{tag}]",
            float(np.max(np.abs(squares - (d + 1) / 2.0 * np.eye(d)))),
            IDENTITY_TOL,
        ),
        _bounded(
            f"sum Pi (x) Pi = P_sym [{tag}]",
            float(np.max(np.abs(doubled - symmetric_projector(d)))),
            IDENTITY_TOL,
        ),
        _bounded(f"sum p^2 = (1 + tr rho^2)/2 [{tag}]", purity_gap, IDENTITY_TOL),
        _bounded(
            f"variance sum >= (d-1)/2 [{tag}]",
            shortfall,
            VERDICT_TOL,
            unit="max shortfall",
        ),
        _bounded(
            f"variance sum = (d-1)/2 on pure states [{tag}]", pure_gap, IDENTITY_TOL
        ),
    ]


def check_identities(
    config: HarnessConfig, suite: CriterionSuite
) -> List[InvariantCheck]:
    """Design identities, then the reconstruction round trip of every design."""
    checks = []
    for d in sorted(suite.sic):
        for nd in [suite.sic[d]] + list(suite.designs.get(d, [])):
            checks.extend(_design_identities(config, nd))
    for p in suite.sources:
        checks.append(_reconstruction(config, p))
    return checks


def _reconstruction(config: HarnessConfig, p: ProjectiveDesign) -> InvariantCheck:
    worst = 0.0
    for stream in _streams(config.seed, _IDENTITY_STREAMS, RECONSTRUCTION_SAMPLES):
        rho = _single_state(p.dim, stream)
        rebuilt = reconstruct_state(povm_probabilities(rho, p), p)
        worst = max(worst, float(np.max(np.abs(rebuilt - rho))))
    return _bounded(
        f"reconstruction round trip [{p.kind} d={p.dim} N={p.n}]",
        worst,
        IDENTITY_TOL,
    )


def check_schmidt(config: HarnessConfig) -> List[InvariantCheck]:
    """CCNR trace norm against Schmidt coefficients, plus orthonormality."""
    checks = []
    for dims in (QUBITS, QUBIT_QUTRIT, QUTRITS):
        norm_gap = ortho_gap = rebuild_gap = 0.0
        for stream in _streams(config.seed, _SCHMIDT_STREAMS, SCHMIDT_SAMPLES):
            rho = random_density_matrix(dims, stream)
            schmidt = operator_schmidt(rho)
            realigned_norm = trace_norm(realign(rho.matrix, dims))
            norm_gap = max(norm_gap, abs(realigned_norm - np.sum(schmidt.lambdas)))
            for ops in (schmidt.ops_A, schmidt.ops_B):
                gram = np.einsum("kij,lji->kl", ops, ops)
                ortho_gap = max(ortho_gap, np.max(np.abs(gram - np.eye(len(ops)))))
            rebuild_gap = max(
                rebuild_gap, np.max(np.abs(schmidt.reconstruct() - rho.matrix))
            )
        checks.extend(
            [
                _bounded(
                    f"CCNR = sum of Schmidt coefficients [{dims}]",
                    norm_gap,
                    SCHMIDT_TOL,
                ),
                _bounded(
                    f"Schmidt operators orthonormal [{dims}]",
                    float(ortho_gap),
                    SCHMIDT_TOL,
                ),
                _bounded(
                    f"Schmidt reconstruction [{dims}]", float(rebuild_gap), SCHMIDT_TOL
                ),
            ]
        )
    return checks


def check_equivalence(
    config: HarnessConfig, suite: CriterionSuite
) -> List[InvariantCheck]:
    """Per-state E2D = ESIC and L2D = LSIC, plus LUR dominating CCNR."""
    checks = []
    cases = (
        (QUBITS, config.qubit_equivalence_samples),
        (QUTRITS, config.qutrit_equivalence_samples),
    )
    for dims, count in cases:
        table = suite.evaluators(dims)
        pairs = [
            (base, name)
            for base, family in (("ESIC", "E2D"), ("LSIC", "L2D"))
            if base in table
            for name in suite.criterion_names(dims)
            if name.startswith(family)
        ]
        gaps = {pair: 0.0 for pair in pairs}
        missed = 0
        for stream in _streams(config.seed, _EQUIVALENCE_STREAMS, count):
            rho = random_density_matrix(dims, stream)
            for base, name in pairs:
                gap = abs(table[base](rho).value - table[name](rho).value)
                gaps[(base, name)] = max(gaps[(base, name)], gap)
            if ccnr(rho).entangled and not lur(rho).entangled:
                missed += 1
        for (base, name), gap in gaps.items():
            checks.append(_bounded(f"{name} = {base} [{dims}]", gap, EQUIVALENCE_TOL))
        checks.append(
            InvariantCheck(
                name=f"LUR detects every CCNR detection [{dims}]",
                passed=missed == 0,
                detail=f"{missed} of {count} states missed",
            )
        )
    return checks


def check_negative_controls(
    config: HarnessConfig, suite: CriterionSuite
) -> List[InvariantCheck]:
    """No criterion may flag a product state or a separable mixture."""
    checks = []
    for dims in (QUBITS, QUBIT_QUTRIT, QUTRITS):
        table = suite.evaluators(dims)
        names = suite.criterion_names(dims)
        worst = {name: -np.inf for name in names}
        streams = _streams(config.seed, _CONTROL_STREAMS, config.negative_controls)
        for i, stream in enumerate(streams):
            if i % 2 == 0:
                rho = random_product_state(dims, stream)
            else:
                rho = random_separable_mixture(dims, stream)
            for name in names:
                worst[name] = max(worst[name], table[name](rho).margin)
        for name in names:
            checks.append(
                _bounded(
                    f"separable states not flagged by {name} [{dims}]",
                    worst[name],
                    VERDICT_TOL,
                    unit="max margin",
                )
            )
    return checks


def check_local_unitaries(
    config: HarnessConfig, suite: CriterionSuite
) -> List[InvariantCheck]:
    """Criterion values under U_A (x) U_B.

    The design versions of the LUR depend on tr(rho P_sym), which only
    U (x) U preserves, so they are checked with equal local unitaries.
    """
    checks = []
    for dims in (QUBITS, QUTRITS):
        table = suite.evaluators(dims)
        names = suite.criterion_names(dims)
        worst = {name: 0.0 for name in names}
        for stream in _streams(config.seed, _UNITARY_STREAMS, LOCAL_UNITARY_SAMPLES):
            rng = stream.generator()
            rho = random_density_matrix(dims, rng)
            u_a = random_unitary(dims.d_A, rng)
            u_b = random_unitary(dims.d_B, rng)
            independent = apply_local_unitaries(rho, u_a, u_b)
            equal = apply_local_unitaries(rho, u_a, u_a)
            for name in names:
                moved = equal if name.startswith(("LSIC", "L2D")) else independent
                gap = abs(table[name](rho).value - table[name](moved).value)
                worst[name] = max(worst[name], gap)
        for name in names:
            checks.append(
                _bounded(
                    f"{name} invariant under local unitaries [{dims}]",
                    worst[name],
                    LOCAL_UNITARY_TOL,
                )
            )
    return checks


def check_thresholds(
    config: HarnessConfig, suite: CriterionSuite
) -> List[InvariantCheck]:
    """Bracket certificates and ESIC/E2D agreement on the noisy singlet."""
    family = noisy_bell_family("psi_minus")
    table = suite.evaluators(QUBITS)
    checks = []
    thresholds = {}
    for name in ("CCNR", "ESIC", "E2D"):
        result = find_threshold(
            family, table[name], config.tol, "psi_minus", name, config.coarse_step
        )
        thresholds[name] = result.threshold
        checks.append(
            InvariantCheck(
                name=f"threshold certificate psi_minus/{name}",
                passed=certify_threshold(result, family, table[name]),
                detail=f"threshold {result.threshold:.6f}",
            )
        )
    gap = abs(thresholds["ESIC"] - thresholds["E2D"])
    checks.append(
        _bounded("threshold E2D = ESIC [psi_minus]", gap, 2 * config.tol, "gap")
    )
    return checks


def check_design_file(path: str) -> InvariantCheck:
    """Load and certify a design file; failures name the broken invariant."""
    name = f"design file {path}"
    try:
        p = load_design(path)
    except InvariantViolation as e:
        return InvariantCheck(name=name, passed=False, detail=str(e))
    except (OSError, ValueError) as e:
        return InvariantCheck(
            name=name, passed=False, detail=f"{type(e).__name__}: {e}"
        )
    return InvariantCheck(
        name=name, passed=True, detail=f"{p.kind} d={p.dim} N={p.n} certified"
    )


def verify_all(
    config: HarnessConfig,
    suite: Optional[CriterionSuite] = None,
    design_paths: Sequence[str] = (),
) -> VerificationReport:
    """Run every self-check and collect the outcome.

    Args:
        config: Harness configuration; seed and sample counts are read here
        suite: Criterion suite; built from config when omitted
        design_paths: Extra design files to load and certify

    Returns:
        The report; it passes iff every check passes
    """
    if suite is None:
        suite = CriterionSuite.build(config.design_n, config.design_seed)
    sections = [
        ("designs", lambda: check_designs(config, suite)),
        ("identities", lambda: check_identities(config, suite)),
        ("schmidt", lambda: check_schmidt(config)),
        ("equivalence", lambda: check_equivalence(config, suite)),
        ("negative controls", lambda: check_negative_controls(config, suite)),
        ("local unitaries", lambda: check_local_unitaries(config, suite)),
        ("thresholds", lambda: check_thresholds(config, suite)),
    ]
    checks: List[InvariantCheck] = []
    for name, run in sections:
        logger.info("Verifying %s", name)
        checks.extend(_guarded(name, run))
    checks.extend(check_design_file(path) for path in design_paths)

    report = VerificationReport(seed=config.seed, checks=checks)
    for check in report.failures:
        logger.error("FAILED %s: %s", check.name, check.detail)
    logger.info(
        "%d of %d checks passed", len(checks) - len(report.failures), len(checks)
    )
    return report
