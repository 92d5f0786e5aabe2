import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lpwfcm.data import MultiLabelDataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", max_examples=10, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_toy(n=120, d=8, n_labels=3, seed=0, offset=0.4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    W = rng.normal(size=(d, n_labels))
    Y = (X @ W + rng.normal(size=(n, n_labels)) > offset).astype(np.int8)
    return MultiLabelDataset(X, Y, [f"x{i}" for i in range(d)],
                             [f"y{j}" for j in range(n_labels)], name="toy")


@pytest.fixture
def toy():
    return make_toy()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        status, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
