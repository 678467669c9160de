"""Seeded Monte Carlo sweeps over random NPT states and chessboard states.

Sample i always draws from RngStream(master_seed, i), so the sample set and
every count are independent of the worker count and of scheduling order.
"""

import concurrent.futures
import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from entdesign.core.criteria import VERDICT_TOL
from entdesign.core.matcore import BipartiteDims
from entdesign.core.states import (
    QUTRITS,
    RngStream,
    check_npt_dims,
    chessboard_parameters,
    chessboard_state,
    draw_npt_sample,
)
from entdesign.harness.suite import CriterionSuite
from entdesign.utils.common_utils import SweepSummary, chunked

logger = logging.getLogger("entdesign.harness")

SampleKind = Literal["npt", "chessboard"]

CHESSBOARD_CRITERIA = ("PPT", "CCNR", "ESIC", "E2D", "LUR", "LSIC", "L2D")


def _evaluate_chunk(
    suite: CriterionSuite,
    kind: SampleKind,
    dims: BipartiteDims,
    master_seed: int,
    names: Sequence[str],
    indices: Sequence[int],
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Margins of every criterion on samples `indices`, plus draws used."""
    table = suite.evaluators(dims)
    values = np.zeros((len(indices), len(names)))
    margins = np.zeros((len(indices), len(names)))
    draws = 0
    for row, index in enumerate(indices):
        stream = RngStream(master_seed=master_seed, stream_index=index)
        if kind == "npt":
            rho, used = draw_npt_sample(dims, stream)
        else:
            rho, used = chessboard_state(chessboard_parameters(stream)), 1
        draws += used
        for col, name in enumerate(names):
            report = table[name](rho)
            values[row, col] = report.value
            margins[row, col] = report.margin
    return values, margins, draws


def _run_sweep(
    suite: CriterionSuite,
    kind: SampleKind,
    family: str,
    dims: BipartiteDims,
    sample_count: int,
    master_seed: int,
    names: List[str],
    workers: int,
    chunk_size: int,
    progress: bool,
) -> SweepSummary:
    if sample_count < 1:
        raise ValueError(f"sample_count must be >= 1, got {sample_count}")
    chunks = list(chunked(range(sample_count), chunk_size))
    logger.info(
        "Sweep %s (%s): %d samples, seed %d, %d workers, criteria %s",
        family,
        dims,
        sample_count,
        master_seed,
        workers,
        ", ".join(names),
    )

    bar = tqdm(total=sample_count, desc=family, disable=not progress)
    parts = []
    if workers == 1:
        for indices in chunks:
            parts.append(
                _evaluate_chunk(suite, kind, dims, master_seed, names, indices)
            )
            bar.update(len(indices))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _evaluate_chunk, suite, kind, dims, master_seed, names, indices
                )
                for indices in chunks
            ]
            for future, indices in zip(futures, chunks):
                parts.append(future.result())
                bar.update(len(indices))
    bar.close()

    values = np.vstack([p[0] for p in parts])
    margins = np.vstack([p[1] for p in parts])
    draws = int(sum(p[2] for p in parts))
    flags = margins > VERDICT_TOL
    counts = {name: int(flags[:, j].sum()) for j, name in enumerate(names)}
    summary = SweepSummary(
        family=family,
        dims=str(dims),
        sample_count=sample_count,
        master_seed=master_seed,
        criteria=names,
        counts=counts,
        fractions={name: counts[name] / sample_count for name in names},
        draws=draws,
        acceptance_rate=sample_count / draws,
        lsic_subset_of=_subset_relation(names, flags),
        max_value_gaps=_value_gaps(names, values),
    )
    for name in names:
        logger.info("  %-12s %6.2f%%", name, 100.0 * summary.fractions[name])
    return summary


def _subset_relation(names: List[str], flags: np.ndarray) -> dict:
    if "LSIC" not in names:
        return {}
    lsic = flags[:, names.index("LSIC")]
    return {
        name: bool(np.all(flags[lsic, j]))
        for j, name in enumerate(names)
        if name != "LSIC"
    }


def _value_gaps(names: List[str], values: np.ndarray) -> dict:
    gaps = {}
    for base, family in (("ESIC", "E2D"), ("LSIC", "L2D")):
        if base not in names:
            continue
        ref = values[:, names.index(base)]
        for j, name in enumerate(names):
            if name.startswith(family):
                gaps[f"{base}-{name}"] = float(np.max(np.abs(values[:, j] - ref)))
    return gaps


def random_sweep(
    suite: CriterionSuite,
    dims: BipartiteDims,
    sample_count: int,
    master_seed: int,
    criteria: Optional[Sequence[str]] = None,
    workers: int = 1,
    chunk_size: int = 500,
    progress: bool = True,
) -> SweepSummary:
    """Detected fractions over Hilbert-Schmidt random NPT states.

    Only 2x2 and 2x3 are accepted, where NPT is the same as entangled.
    """
    check_npt_dims(dims)
    names = suite.criterion_names(dims, criteria)
    return _run_sweep(
        suite,
        "npt",
        f"random_npt_{dims}",
        dims,
        sample_count,
        master_seed,
        names,
        workers,
        chunk_size,
        progress,
    )


def chessboard_sweep(
    suite: CriterionSuite,
    sample_count: int,
    master_seed: int,
    workers: int = 1,
    chunk_size: int = 500,
    progress: bool = True,
) -> SweepSummary:
    """Detected fractions over random 3x3 chessboard states."""
    names = suite.criterion_names(QUTRITS, CHESSBOARD_CRITERIA)
    return _run_sweep(
        suite,
        "chessboard",
        "chessboard",
        QUTRITS,
        sample_count,
        master_seed,
        names,
        workers,
        chunk_size,
        progress,
    )
