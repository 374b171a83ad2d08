import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from languages import SPECS  # noqa: E402
from fodomain.oracle import LanguageOracle, default_bounds  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_criteria: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria[marker.args[0]].append("skipped" if rep.skipped else rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        if any(r == "failed" for r in results):
            verdict = "FAIL"
        elif all(r == "skipped" for r in results):
            verdict = "SKIPPED"
        else:
            verdict = "PASS"
        noun = "check" if len(results) == 1 else "checks"
        terminalreporter.write_line(f"criterion {n}: {verdict} ({len(results)} {noun})")


@pytest.fixture(scope="session")
def oracles():
    """One bitmask oracle per shared test language, built lazily."""
    cache = {}

    def get(name):
        if name not in cache:
            factory, sig = SPECS[name]
            cache[name] = LanguageOracle(factory(), default_bounds(sig), sig)
        return cache[name]

    return get


@pytest.fixture
def fixtures_dir():
    return FIXTURES
