from __future__ import annotations

from functools import lru_cache

import pytest

from spinvibronic import (
    DEFECTS,
    SolverOptions,
    pes_to_couplings,
    solve_sector,
)

FAST_OPTS = SolverOptions(k=8, dense_threshold=4000)


@pytest.fixture(scope="session")
def defects():
    return DEFECTS


@lru_cache(maxsize=None)
def cached_sector(name: str, cutoff: int, preset: str = "e-raised", k: int = 8):
    """Shared zero-spin-orbit solves; cached across the whole test session."""
    p = DEFECTS[name]
    opts = SolverOptions(k=k, dense_threshold=4000)
    return solve_sector(pes_to_couplings(p), p.lambda_corr, cutoff, preset, opts)


@pytest.fixture(scope="session")
def snv0_sector():
    return cached_sector("SnV0", 20)
