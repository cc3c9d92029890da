import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coke import KernelSpec, LabeledDataset  # noqa: E402


@pytest.fixture
def spec():
    return KernelSpec("matern_exp", rho=5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy_data(rng):
    """Small two-arm dataset with both arms present."""
    n = 40
    Z = rng.uniform(-np.pi, np.pi, size=(n, 2))
    a = np.tile([0, 1], n // 2)
    y = np.sin(Z[:, 0]) * a + np.cos(Z[:, 1]) + 0.1 * rng.standard_normal(n)
    return LabeledDataset(Z, a, y)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        if report.outcome == "failed" and not detail:
            detail = report.longreprtext.strip().splitlines()[-1] if report.longreprtext else ""
        _ACCEPTANCE[report.nodeid.rsplit("::", 1)[1]] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        outcome, detail = _ACCEPTANCE[name]
        label = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{label}  {name[len('test_'):]}: {detail}")
