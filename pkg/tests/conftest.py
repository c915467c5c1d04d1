import numpy as np
import pytest
from hypothesis import settings

from helixlink.control import build_calibration_table

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table():
    return build_calibration_table()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _criterion_key(line):
    label = line.split()[1].rstrip(":")
    digits = label.rstrip("abcdefghijklmnopqrstuvwxyz")
    return int(digits), label


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_key):
            terminalreporter.write_line(line)
