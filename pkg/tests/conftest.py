import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

settings.register_profile("repo", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def fixture_path():
    def _path(name):
        return os.path.join(FIXTURES, name)
    return _path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
