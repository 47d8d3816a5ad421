import os

import hypothesis.strategies as st
import pytest
from hypothesis import HealthCheck, settings

from hedonic_fa.core import Instance, Model

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def instances(draw, min_n=1, max_n=7, model=Model.FA):
    n = draw(st.integers(min_n, max_n))
    friends = [draw(st.sets(st.sampled_from([j for j in range(n) if j != i]) if n > 1 else st.nothing())) for i in range(n)]
    return Instance(n, friends, model)


@st.composite
def instance_and_partition(draw, min_n=1, max_n=7, model=Model.FA):
    from hedonic_fa.core import Partition

    inst = draw(instances(min_n, max_n, model))
    labels = draw(st.lists(st.integers(0, inst.n - 1), min_size=inst.n, max_size=inst.n))
    return inst, Partition.from_labels(labels)


@pytest.fixture
def three_chain():
    # 0 -> 1, 1 -> 2, 2 -> 1
    return Instance(3, [{1}, {2}, {1}])


# one verdict line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
