import numpy as np
import pytest
from hypothesis import settings

from airate import SymbolBatch, build_qam

settings.register_profile("airate", deadline=None, max_examples=40)
settings.load_profile("airate")


@pytest.fixture(scope="session")
def qam16():
    return build_qam(16)


@pytest.fixture(scope="session")
def qpsk():
    return build_qam(4)


def noiseless_batch(c, n=4096, seed=0, batch_id="noiseless"):
    """Every 4D symbol received exactly at its constellation point."""
    from airate.constellation import symbol_vectors

    g = np.random.default_rng(seed)
    tx = np.concatenate([np.arange(c.order ** 2), g.integers(0, c.order ** 2, n)])
    return SymbolBatch(tx=tx, rx=symbol_vectors(c, tx), batch_id=batch_id)


# Acceptance verdicts, echoed in the terminal summary so they survive output capture.
ACCEPTANCE = []


def record(number: int, passed: bool, detail: str):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
