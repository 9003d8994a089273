from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import ACCEPTANCE_RESULTS, NETWORK_ATTEMPTS, block_network, unblock_network  # noqa: E402


@pytest.fixture(autouse=True, scope="session")
def _offline():
    """No test may touch the network; archive and site traffic is replayed."""
    block_network()
    yield
    unblock_network()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(line)
    if NETWORK_ATTEMPTS:
        terminalreporter.section("network access")
        terminalreporter.write_line(f"live network attempts: {NETWORK_ATTEMPTS}")


def pytest_sessionfinish(session, exitstatus):
    if NETWORK_ATTEMPTS and exitstatus == 0:
        session.exitstatus = 1
