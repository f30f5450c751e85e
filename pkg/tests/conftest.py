import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

from latent_mbl.data import MblDataset  # noqa: E402


def make_k1_dataset(n=200, seed=0, coef=(-0.4, 1.3)):
    """Single-response logistic data with one time point per subject."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.02, 0.98, n)
    p = 1 / (1 + np.exp(-(coef[0] + coef[1] * t)))
    y = (rng.random(n) < p).astype(float)
    return MblDataset(np.arange(n), np.ones(n), t, y[:, None])


@pytest.fixture
def k1_data():
    return make_k1_dataset()


CRITERIA_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""
    def record(number: int, ok: bool, summary: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {summary}"
        CRITERIA_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
