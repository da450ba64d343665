import contextlib
import time

import numpy as np
import pytest

_CRITERIA: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records one PASS/FAIL line; ``c["detail"]`` adds context."""

    @contextlib.contextmanager
    def run(number, title):
        info = {"detail": ""}
        start = time.perf_counter()
        try:
            yield info
        except BaseException as exc:
            line = f"criterion {number:>2}: FAIL  {title} ({time.perf_counter() - start:.1f}s) {info['detail']} -- {exc}"
            print(line)
            _CRITERIA.append(line)
            raise
        line = f"criterion {number:>2}: PASS  {title} ({time.perf_counter() - start:.1f}s) {info['detail']}"
        print(line)
        _CRITERIA.append(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line.splitlines()[0])
