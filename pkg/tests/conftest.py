import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from restrictml import _kernels
from restrictml.dataset import featurize_entries
from restrictml.enzymedb import bundled_catalog
from restrictml.fixtures import bundled_genes, bundled_reference
from restrictml.sitescan import build_scanner
from restrictml.synthsim import generate_labeled_entries

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=100
)
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = sorted(_kernels.BACKENDS)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def catalog():
    return bundled_catalog()


@pytest.fixture(scope="session")
def scanner(catalog):
    return build_scanner(catalog)


@pytest.fixture(scope="session")
def desk_genes():
    return bundled_genes()


@pytest.fixture(scope="session")
def desk_reference():
    return bundled_reference()


@pytest.fixture(scope="session")
def desk_entries(desk_genes, desk_reference, scanner):
    return generate_labeled_entries(desk_genes, desk_reference.sequence, scanner)


@pytest.fixture(scope="session")
def desk_dataset(desk_entries):
    return featurize_entries(desk_entries)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ----------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion

_acceptance: dict[str, tuple[str, list]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_ac" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        details = [v for k, v in report.user_properties if k == "detail"]
        _acceptance[name] = (report.outcome, details)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        outcome, details = _acceptance[name]
        label = name.split("_")[1].upper().replace("AC0", "AC")
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label:<5} {status}  {name}")
        for d in details:
            terminalreporter.write_line(f"        {d}")
