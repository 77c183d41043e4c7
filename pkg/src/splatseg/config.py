"""Tunables shared by the session service and the CLI."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from splatseg.backends import GROWTH_RADIUS_M
from splatseg.projection import RHO2_THRESHOLD
from splatseg.prompts import OPACITY_THRESHOLD, WEIGHT_SIGMA_M
from splatseg.refine import RefineParams
from splatseg.segmenter import BATCH_CAP, CROP_HEIGHT_M, CROP_RADIUS_M, DEFAULT_SEED, LAST_WRITER_WINS

SEED_ENV_VAR = "SPLATSEG_SEED"


@dataclass
class PipelineParams:
    opacity_threshold: float = OPACITY_THRESHOLD
    sigma_m: float = WEIGHT_SIGMA_M
    crop_radius_m: float = CROP_RADIUS_M
    crop_height_m: float = CROP_HEIGHT_M
    growth_radius_m: float = GROWTH_RADIUS_M
    rho2_threshold: float = RHO2_THRESHOLD
    batch_cap: int = BATCH_CAP
    seed: int = DEFAULT_SEED
    threads: int = 1
    backend_spec: str = "baseline"
    overwrite: str = LAST_WRITER_WINS
    refine: RefineParams = field(default_factory=RefineParams)

    def to_dict(self) -> dict:
        return {
            "opacity_threshold": self.opacity_threshold,
            "sigma_m": self.sigma_m,
            "crop_radius_m": self.crop_radius_m,
            "crop_height_m": self.crop_height_m,
            "growth_radius_m": self.growth_radius_m,
            "rho2_threshold": self.rho2_threshold,
            "batch_cap": self.batch_cap,
            "seed": self.seed,
            "threads": self.threads,
            "backend_spec": self.backend_spec,
            "overwrite": self.overwrite,
            "refine": {
                "large_close_radius": self.refine.large_close_radius,
                "large_close_iters": self.refine.large_close_iters,
                "small_close_radius": self.refine.small_close_radius,
                "small_close_iters": self.refine.small_close_iters,
                "edge_margin": self.refine.edge_margin,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineParams":
        data = dict(data or {})
        refine = RefineParams(**data.pop("refine", {}) or {})
        return cls(refine=refine, **data)


def resolve_seed(cli_seed: int | None) -> int:
    """SPLATSEG_SEED overrides any CLI/request seed."""
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env != "":
        return int(env)
    return DEFAULT_SEED if cli_seed is None else int(cli_seed)
