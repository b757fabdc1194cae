import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "maat", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("maat")


@pytest.fixture(scope="session")
def default_sim():
    """(config, corpus, ground truth) of the default simulation with seed 42."""
    from maat.simulator import default_config, generate_corpus

    cfg = default_config(42)
    corpus, gt = generate_corpus(cfg)
    return cfg, corpus, gt


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
