import numpy as np
import pytest

from evoplan.scenario import OFF, BaseStation, Scenario, StationType, SubscriberCluster, default_transitions

BASIC_TYPES = (
    StationType(OFF, 0.0, 0.0, 0.0, "off"),
    StationType("small", 100.0, 2.0, 1.0, "3G"),
    StationType("big", 300.0, 2.0, 1.5, "LTE"),
    StationType("wide", 300.0, 4.0, 2.0, "LTE"),
)
BASIC_TRANSITIONS = frozenset({("small", "big"), ("small", "wide"), ("big", "wide"),
                               ("small", OFF), ("big", OFF), ("wide", OFF),
                               (OFF, "small"), (OFF, "big"), (OFF, "wide")})


def make_scenario(stations, clusters, demand, *, types=BASIC_TYPES, transitions=BASIC_TRANSITIONS,
                  operators=("op0",), N=1, h_max=1.0, phi=0.7):
    """stations: (id, x, y, initial type[, owner]); clusters: (id, x, y);
    demand: (C, K) for one operator or (C, K, O)."""
    ids = frozenset(t.id for t in types)
    st = []
    for s in stations:
        owner = s[4] if len(s) > 4 else operators[0]
        st.append(BaseStation(s[0], float(s[1]), float(s[2]), s[3], owner, ids))
    cl = tuple(SubscriberCluster(c[0], float(c[1]), float(c[2])) for c in clusters)
    d = np.asarray(demand, dtype=float)
    if d.ndim == 2:
        d = d[:, :, None]
    return Scenario(stations=tuple(st), clusters=cl, operators=tuple(operators), horizon=d.shape[1],
                    change_rate=N, h_max=h_max, phi=phi, type_table=tuple(types),
                    transitions=frozenset(transitions), demand=d)


@pytest.fixture
def small_generated():
    from evoplan.scenario import GeneratorParams, generate
    return generate(GeneratorParams(stations=20, clusters=80, horizon=8, seed=11, change_rate=6))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


__all__ = ["make_scenario", "BASIC_TYPES", "BASIC_TRANSITIONS", "ACCEPTANCE_LINES", "default_transitions"]
