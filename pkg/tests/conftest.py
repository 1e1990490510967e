from __future__ import annotations

import pytest

from crpc_helix.config import PROFILE_ENV, Tolerances, reset_tolerances


@pytest.fixture(autouse=True)
def _clean_tolerances(monkeypatch):
    monkeypatch.delenv(PROFILE_ENV, raising=False)
    reset_tolerances()
    yield
    reset_tolerances()


@pytest.fixture
def tol() -> Tolerances:
    return Tolerances()


# (k, C, branch) configurations the certificate must pass on
CERTIFIED = [
    (3.0, 1.0, "full"),
    (3.0, 0.375, "full"),
    (3.0, 0.01, "full"),
    (2.0, 1.0, "full"),
    (0.5, 2.0, "minus"),
    (0.5, 2.0, "plus"),
]
