import pytest

from finmodel.generate import random_cofiltered_diagram
from finmodel.library import GRAPH


@pytest.fixture(scope="session")
def random_diagrams():
    return [random_cofiltered_diagram(GRAPH, seed) for seed in range(25)]


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
