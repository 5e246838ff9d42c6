# config.py
# Defaults for every search bound in the lab, plus environment overrides.
# Imported by finder.py, prover.py, experiments.py, cli.py and api.py.

from __future__ import annotations

import os
from typing import Optional

from pydantic import BaseModel, field_validator

VERSION = '1.0.0'

# ---- SEARCH BOUNDS -------------------------------------------
DEFAULT_CAP        = 6     # largest domain tried by minimal_model_size
DEFAULT_DEPTH_CAP  = 2     # Herbrand term depth on the non-EPR path
DEFAULT_SIZE_CAP   = 4     # countermodel sizes interleaved with Herbrand search
CROSS_CHECK_SIZE   = 4     # every Proved verdict is re-searched up to this size
SYMMETRY_MAX_SIZE  = 6     # lex-leader constraints enumerate n! permutations
ORACLE_MAX_BITS    = 27    # exhaustive oracle enumerates 2**bits interpretations
HERBRAND_MAX_INSTANCES = 200_000

# ---- RUN BUDGET ----------------------------------------------
TIME_BUDGET_SECONDS = 300.0

ENV_PREFIX = 'BETWEENLAB_'


class Settings(BaseModel):
    cap: int = DEFAULT_CAP
    depth_cap: int = DEFAULT_DEPTH_CAP
    size_cap: int = DEFAULT_SIZE_CAP
    cross_check_size: int = CROSS_CHECK_SIZE
    jobs: Optional[int] = None
    minimize_cores: bool = False
    cross_check: bool = True
    exhaustive_oracle: bool = False

    @field_validator('cap', 'size_cap', 'cross_check_size')
    @classmethod
    def at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError('Must be at least 1')
        return v

    @field_validator('depth_cap')
    @classmethod
    def non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError('Must be non-negative')
        return v

    @field_validator('jobs')
    @classmethod
    def jobs_not_zero(cls, v: Optional[int]) -> Optional[int]:
        if v == 0:
            raise ValueError('jobs must be a positive count or -1 for all cores')
        return v

    @property
    def n_jobs(self) -> int:
        # joblib convention: -1 uses every available core
        return -1 if self.jobs is None else self.jobs

    @classmethod
    def from_env(cls, environ=None, **overrides) -> 'Settings':
        env = os.environ if environ is None else environ
        values = {}
        for field in ('cap', 'depth_cap', 'size_cap', 'cross_check_size', 'jobs'):
            raw = env.get(ENV_PREFIX + field.upper())
            if raw not in (None, ''):
                values[field] = int(raw)
        for field in ('minimize_cores', 'cross_check', 'exhaustive_oracle'):
            raw = env.get(ENV_PREFIX + field.upper())
            if raw not in (None, ''):
                values[field] = raw.strip().lower() in ('1', 'true', 'yes', 'on')
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
