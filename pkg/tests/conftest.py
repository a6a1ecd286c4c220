import pytest
from hypothesis import HealthCheck, settings

from greedylab.norms import make_engine

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("repo")

ENGINE_CONFIGS = {
    "lp1": {"norm": "lp", "q": 1},
    "lp2": {"norm": "lp", "q": 2},
    "lp_half": {"norm": "lp", "q": 0.5},
    "sup": {"norm": "sup"},
    "weighted": {"norm": "weighted_lp", "q": 1, "weights": [1, 0.5, 0.25]},
    "interval_sup": {"norm": "interval_sup"},
}


@pytest.fixture(params=sorted(ENGINE_CONFIGS))
def engine(request):
    return make_engine(ENGINE_CONFIGS[request.param])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
