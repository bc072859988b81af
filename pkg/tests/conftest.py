import pytest

from orbital_measures import dyadic_chain, dyadic_rotation_action, prufer_translation_action


@pytest.fixture(scope="session")
def chain12():
    return dyadic_chain(12)


@pytest.fixture(scope="session")
def rotation(chain12):
    return dyadic_rotation_action(chain12)


@pytest.fixture(scope="session")
def prufer_action():
    return prufer_translation_action(dyadic_chain(8), 8)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
