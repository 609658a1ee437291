"""Shared fixtures and the acceptance-summary reporter.

The two lattice studies below cost a couple of minutes combined, so they are
session-scoped and shared by every test that needs them.  Tests marked
``acceptance(num, text)`` get one PASS/FAIL line each in the terminal
summary, aggregated per criterion number.
"""

import numpy as np
import pytest

from carleman_adr.adr_core import AdrParams, InitialBox, gaussian_velocity
from carleman_adr.carleman import convergence_study


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(num, text): numbered acceptance criterion check")


# --- heavy shared studies --------------------------------------------------------


@pytest.fixture(scope="session")
def baseline_params():
    return AdrParams(n_sites=20, diffusion=1.0, velocity=1.0, reaction_a=1.0,
                     reaction_b=0.6, dx=1.0, dt=0.01)


@pytest.fixture(scope="session")
def baseline_phi0():
    return InitialBox(height=1.0, width=5).field(20)


@pytest.fixture(scope="session")
def baseline_study(baseline_params, baseline_phi0):
    """Box run, K = 1..5, 1000 steps (the K=5 state has ~3.37M components)."""
    return convergence_study(baseline_phi0, baseline_params, 1000, [1, 2, 3, 4, 5])


@pytest.fixture(scope="session")
def gaussian_study(baseline_phi0):
    """Same box run driven by a Gaussian velocity bump, K = 5 only."""
    params = AdrParams(n_sites=20, diffusion=1.0, velocity=gaussian_velocity(20),
                       reaction_a=1.0, reaction_b=0.6, dx=1.0, dt=0.01)
    return convergence_study(baseline_phi0, params, 1000, [5])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


# --- acceptance summary ------------------------------------------------------------

_ACCEPTANCE: dict[str, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    num, text = str(mark.args[0]), mark.args[1]
    entry = _ACCEPTANCE.setdefault(num, {"text": text, "failed": [], "passed": []})
    (entry["failed"] if report.failed else entry["passed"]).append(item.name)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE, key=lambda s: (len(s), s)):
        entry = _ACCEPTANCE[num]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {num:>2}: {status}  {entry['text']}"
        if entry["failed"] and entry["passed"]:
            line += f"  (failing part: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)
