import json
import logging
import os
from typing import Dict, Iterator, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger("entdesign.harness")


class ThresholdResult(BaseModel):
    family: str
    criterion: str
    threshold: float
    bracket_width: float
    detected: bool = True
    warning: Optional[str] = None


class SweepSummary(BaseModel):
    family: str
    dims: str
    sample_count: int
    master_seed: int
    criteria: List[str]
    counts: Dict[str, int]
    fractions: Dict[str, float]
    draws: int
    acceptance_rate: float
    lsic_subset_of: Dict[str, bool] = {}
    max_value_gaps: Dict[str, float] = {}


class InvariantCheck(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class VerificationReport(BaseModel):
    seed: int
    checks: List[InvariantCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[InvariantCheck]:
        return [check for check in self.checks if not check.passed]


def chunked(indices: Sequence[int], size: int) -> Iterator[List[int]]:
    """Split indices into consecutive chunks of at most size entries."""
    indices = list(indices)
    for start in range(0, len(indices), size):
        yield indices[start : start + size]


def results_frame(records: Sequence[BaseModel]) -> pd.DataFrame:
    return pd.DataFrame([record.model_dump() for record in records])


def sweep_frame(summary: SweepSummary) -> pd.DataFrame:
    rows = [
        {
            "family": summary.family,
            "criterion": name,
            "detected": summary.counts[name],
            "samples": summary.sample_count,
            "fraction": summary.fractions[name],
        }
        for name in summary.criteria
    ]
    return pd.DataFrame(rows)


def write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        print(text)
        return
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("Wrote %s", out)


def dump_json(payload: Dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)
