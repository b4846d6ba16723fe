import math

import numpy as np
import pytest

from handqubo.catalog import build_catalog
from handqubo.metrics import evaluate_catalog
from handqubo.qubo import build_qubo

COARSE = math.pi / 12


@pytest.fixture(scope="session")
def catalog():
    return build_catalog()


@pytest.fixture(scope="session")
def coarse_table(catalog):
    return evaluate_catalog(catalog, resolution=COARSE)


@pytest.fixture(scope="session")
def coarse_qubo(coarse_table):
    return build_qubo(coarse_table)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_configs(chain, n, rng):
    lo = np.array([a for a, _ in chain.joint_limits])
    hi = np.array([b for _, b in chain.joint_limits])
    return np.clip(lo + (hi - lo) * rng.random((n, chain.joint_count)), lo, hi)


_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        notes = getattr(item, "criterion_notes", "")
        _acceptance.append((number, title, report.outcome, notes))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, notes in sorted(_acceptance):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{verdict}] {number:>2}. {title}"
        if notes:
            line += f"  ({notes})"
        terminalreporter.write_line(line)
