"""Shared fixtures: seeded RNG and small ready-made grids."""

import numpy as np
import pytest

from msqs.grids import PsiGrid, YeeGrid


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)


@pytest.fixture
def psi_grid() -> PsiGrid:
    return PsiGrid(128, 64, 1.0, 1.0, -64.0, -32.0)


@pytest.fixture
def yee_grid() -> YeeGrid:
    return YeeGrid(64, 64, 1.0, 1.0, 0.0, 0.0)
