"""Harness configuration: defaults, TOML file, then command-line overrides."""

import logging
from typing import Any, Dict, List, Optional

import toml
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger("entdesign.cli")


class HarnessConfig(BaseModel):
    seed: int = Field(default=20211, ge=0, lt=2**64)
    samples: int = Field(default=50_000, ge=1)
    tol: float = Field(default=1e-5, gt=0.0)
    coarse_step: float = Field(default=0.01, gt=0.0, le=0.5)
    # N of the E2D/L2D designs per local dimension
    design_n: Dict[int, List[int]] = {2: [7, 9], 3: [18]}
    design_seed: int = Field(default=7, ge=0)
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=500, ge=1)
    qubit_equivalence_samples: int = 500
    qutrit_equivalence_samples: int = 200
    identity_samples: int = 1000
    negative_controls: int = 1000
    x_grid: List[float] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    log_dir: str = "logs"
    progress: bool = True

    @field_validator("design_n")
    @classmethod
    def _check_design_n(cls, v: Dict[int, List[int]]):
        for d, ns in v.items():
            for n in ns:
                if n < d * d:
                    raise ValueError(f"a 2-design in d={d} needs N >= {d * d}, got {n}")
        return v

    @field_validator("x_grid")
    @classmethod
    def _check_grid(cls, v: List[float]):
        if any(not 0.0 < x < 1.0 for x in v):
            raise ValueError("Horodecki grid values must lie in (0, 1)")
        return v


def load_config(
    path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
) -> HarnessConfig:
    """Build the harness configuration.

    Args:
        path: Optional TOML file; its [harness] table supplies values
        overrides: Values from the command line; None entries are ignored

    Returns:
        The validated configuration
    """
    data: Dict[str, Any] = {}
    if path:
        data.update(toml.load(path).get("harness", {}))
        logger.debug("Loaded configuration from %s", path)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return HarnessConfig(**data)
