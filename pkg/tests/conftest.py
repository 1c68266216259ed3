import numpy as np
import pytest

try:
    from hypothesis import settings

    settings.register_profile("qbounce", deadline=None, max_examples=60)
    settings.load_profile("qbounce")
except ImportError:
    pass

# acceptance-criterion registry: each test in test_acceptance.py records its
# verdict here before asserting, so the run always ends with one summary
# line per criterion whatever passed or failed
_CRITERIA = {}


def record_criterion(number: int, passed: bool, detail: str):
    _CRITERIA[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {number}] {word} -- {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
