import numpy as np
import pytest

ACCEPTANCE = []


def record(number, title, passed, detail=""):
    ACCEPTANCE.append((number, title, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title}  {detail}")


@pytest.fixture
def rng_np():
    return np.random.default_rng(12345)
