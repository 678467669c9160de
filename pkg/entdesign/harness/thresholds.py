"""Threshold search over mixing weights and the table/curve drivers."""

import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from entdesign.core.criteria import VERDICT_TOL, CriterionReport, lur
from entdesign.core.states import (
    BELL_KINDS,
    DensityMatrix,
    bell_state,
    bennett_upb_state,
    horodecki_state,
    mix_with_white_noise,
    noisy_two_qubit,
)
from entdesign.harness.suite import CriterionFn, CriterionSuite
from entdesign.utils.common_utils import ThresholdResult

logger = logging.getLogger("entdesign.harness")

FamilyFn = Callable[[float], DensityMatrix]

DEFAULT_TOL = 1e-5
COARSE_STEP = 0.01


def _excess(criterion: CriterionFn, rho: DensityMatrix) -> float:
    """Margin above the verdict tolerance; positive means detected."""
    return criterion(rho).margin - VERDICT_TOL


def _detected(criterion: CriterionFn, rho: DensityMatrix) -> bool:
    return _excess(criterion, rho) > 0.0


def find_threshold(
    family: FamilyFn,
    criterion: CriterionFn,
    tol: float = DEFAULT_TOL,
    family_name: str = "",
    criterion_name: str = "",
    step: float = COARSE_STEP,
) -> ThresholdResult:
    """Smallest mixing weight p from which the criterion detects family(p).

    A coarse scan over [0, 1] locates the crossing, bisection then narrows it
    to a bracket no wider than tol. Bisection follows the sign of the
    continuous margin (less the verdict tolerance) at each midpoint, so the
    bracket always straddles its zero.

    Args:
        family: Map p -> state, defined on [0, 1]
        criterion: Map state -> CriterionReport
        tol: Final bracket width
        family_name: Label stored on the result
        criterion_name: Label stored on the result; taken from the first
            report when empty
        step: Coarse scan resolution

    Returns:
        The threshold; 1.0 with detected=False when no crossing exists
    """
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    reports: List[CriterionReport] = [criterion(family(p)) for p in grid]
    name = criterion_name or reports[0].criterion
    flags = [r.margin - VERDICT_TOL > 0.0 for r in reports]

    rising = [i for i in range(len(grid) - 1) if not flags[i] and flags[i + 1]]
    falling = [i for i in range(len(grid) - 1) if flags[i] and not flags[i + 1]]

    warning: Optional[str] = None
    if len(rising) + len(falling) > 1:
        warning = (
            f"{len(rising) + len(falling)} sign changes in the coarse scan; "
            "bisecting the highest-p onset"
        )
        logger.warning("%s / %s: %s", family_name, name, warning)

    if not rising:
        if falling and warning is None:
            lost = float(grid[falling[0] + 1])
            warning = f"detected at low p and lost from p = {lost:.2f} on"
            logger.warning("%s / %s: %s", family_name, name, warning)
        if flags[0] and flags[-1]:
            return ThresholdResult(
                family=family_name,
                criterion=name,
                threshold=0.0,
                bracket_width=0.0,
                warning=warning,
            )
        return ThresholdResult(
            family=family_name,
            criterion=name,
            threshold=1.0,
            bracket_width=0.0,
            detected=False,
            warning=warning,
        )

    i = rising[-1]
    lo, hi = float(grid[i]), float(grid[i + 1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _excess(criterion, family(mid)) > 0.0:
            hi = mid
        else:
            lo = mid
    result = ThresholdResult(
        family=family_name,
        criterion=name,
        threshold=0.5 * (lo + hi),
        bracket_width=hi - lo,
        warning=warning,
    )
    logger.debug("%s / %s: threshold %.6f", family_name, name, result.threshold)
    return result


def certify_threshold(
    result: ThresholdResult, family: FamilyFn, criterion: CriterionFn
) -> bool:
    """Re-evaluate the bracket: undetected below, detected above."""
    if not result.detected:
        return not _detected(criterion, family(1.0))
    below = max(0.0, result.threshold - result.bracket_width)
    above = min(1.0, result.threshold + result.bracket_width)
    if result.threshold - result.bracket_width >= 0.0 and _detected(
        criterion, family(below)
    ):
        return False
    return _detected(criterion, family(above))


def noisy_bell_family(kind: str) -> FamilyFn:
    return lambda p: noisy_two_qubit(kind, p)


def bennett_family() -> FamilyFn:
    rho = bennett_upb_state()
    return lambda p: mix_with_white_noise(rho, p)


def horodecki_family(x: float) -> FamilyFn:
    rho = horodecki_state(x)
    return lambda p: mix_with_white_noise(rho, p)


def _scan_family(
    suite: CriterionSuite,
    family: FamilyFn,
    family_name: str,
    tol: float,
    step: float,
    include: Optional[Sequence[str]] = None,
    extra: Optional[Dict[str, CriterionFn]] = None,
) -> List[ThresholdResult]:
    dims = family(1.0).dims
    table = suite.evaluators(dims)
    table.update(extra or {})
    names = suite.criterion_names(dims, include) + list(extra or {})
    results = []
    for name in names:
        results.append(
            find_threshold(family, table[name], tol, family_name, name, step)
        )
    return results


def bell_thresholds(
    suite: CriterionSuite, tol: float = DEFAULT_TOL, step: float = COARSE_STEP
) -> List[ThresholdResult]:
    """Noisy Bell states mixed with separable noise, every criterion.

    LUR is reported with the LOOs of rho(p) itself and, as "LUR(pure)", with
    the LOOs of the pure Bell state.
    """
    results = []
    for kind in BELL_KINDS:
        pure = bell_state(kind)
        extra = {"LUR(pure)": lambda rho, pure=pure: lur(rho, loo_state=pure)}
        logger.info("Bell thresholds: scanning %s", kind)
        results.extend(
            _scan_family(suite, noisy_bell_family(kind), kind, tol, step, extra=extra)
        )
    return results


def upb_thresholds(
    suite: CriterionSuite, tol: float = DEFAULT_TOL, step: float = COARSE_STEP
) -> List[ThresholdResult]:
    """The tiles-UPB bound entangled state mixed with white noise."""
    logger.info("UPB thresholds: scanning bennett_upb")
    return _scan_family(suite, bennett_family(), "bennett_upb", tol, step)


def horodecki_curves(
    suite: CriterionSuite,
    x_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    step: float = COARSE_STEP,
    include: Sequence[str] = ("PPT", "CCNR", "ESIC", "E2D", "LUR"),
) -> List[ThresholdResult]:
    """Detection threshold in p for every x of the grid and every criterion."""
    results = []
    for x in x_grid:
        if not 0.0 < x < 1.0:
            raise ValueError(f"grid value {x} outside (0, 1)")
        name = f"horodecki(x={x:.2f})"
        logger.info("Horodecki curves: scanning %s", name)
        results.extend(
            _scan_family(suite, horodecki_family(x), name, tol, step, include)
        )
    return results
