import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from greentwin import kernels  # noqa: E402


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = kernels.available_backends()[request.param]
    for name in ("rnn_forward", "rnn_bptt", "mpc_search"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``report(ok, detail)``; printed in the summary."""
    name = request.node.get_closest_marker("criterion").args[0]
    state = {}

    def report(ok: bool, detail: str) -> None:
        state["line"] = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(state["line"])

    yield report
    ACCEPTANCE_LINES.append(state.get("line", f"[FAIL] {name}: did not report (error before the check)"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("C", 1)[1].split(" ", 1)[0])):
            terminalreporter.write_line(line)
