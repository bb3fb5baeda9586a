import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    ran = set()
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            name = getattr(rep, "nodeid", "")
            if "test_criterion_" in name:
                ran.add(int(name.split("test_criterion_")[1].split("_")[0]))
    if not ran:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ran):
        terminalreporter.write_line(
            mod.RESULTS.get(n, f"criterion {n}: FAIL (raised before a result was recorded)")
        )
