import warnings

import numpy as np
import pytest

from nhscatter import ImaginaryOnsite, LatticeSpec, build_finite_hamiltonian, eigendecompose
from nhscatter.dynamics import gaussian_packet

# results of acceptance tests, filled by the report hook below
_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(label): acceptance criterion reported in the terminal summary"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        details = [str(v) for k, v in item.user_properties if k == "detail"]
        _ACCEPTANCE.append((marker.args[0], report.outcome, "; ".join(details)))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in sorted(_ACCEPTANCE):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"{status}  {label}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def lattice800():
    return LatticeSpec(800)


@pytest.fixture(scope="session")
def spectrum800(lattice800):
    """Cached L=800 eigendecompositions of the gain/loss center, keyed by gamma1."""
    cache = {}

    def get(gamma1):
        if gamma1 not in cache:
            H = build_finite_hamiltonian(ImaginaryOnsite(1.0, gamma1), lattice800)
            cache[gamma1] = eigendecompose(H, lattice800.sites)
        return cache[gamma1]

    return get


@pytest.fixture(scope="session")
def packet800(lattice800):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return gaussian_packet(lattice800, -200, 40.0, np.pi / 3)
