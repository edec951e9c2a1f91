import os

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from mtdc.controller import ControllerParams
from mtdc.graph import NetworkModel
from mtdc.random_instances import random_connected_edges

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("stress", deadline=None, max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FOURBUS_EDGES = ((1, 2, 0.0065), (1, 3, 0.0065), (2, 4, 0.0065), (3, 4, 0.0065))
FOURBUS_C = 123.79e-6
I_SCENARIO_1 = np.array([300.0, 200.0, -100.0, -400.0])
I_SCENARIO_2 = np.array([300.0, 200.0, -300.0, -400.0])

_ACCEPTANCE: list[str] = []


@pytest.fixture
def fourbus_model():
    return NetworkModel(n=4, edges=FOURBUS_EDGES, capacitances=(FOURBUS_C,) * 4)


@pytest.fixture
def fourbus_params():
    return ControllerParams(K_P=(1.0,) * 4, K_V=(1.5,) * 4, gamma=0.005, delta=0.005, V_nom=(100.0,) * 4)


@pytest.fixture
def criterion():
    """Record a one-line pass/fail verdict that is echoed in the terminal summary."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" -- {detail}" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@st.composite
def models(draw, min_n=2, max_n=6, mirror_comm=None):
    """Random connected NetworkModel."""
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    edges = random_connected_edges(rng, n)
    pos = st.floats(0.05, 20.0, allow_nan=False)
    R = [draw(pos) for _ in edges]
    caps = [draw(pos) for _ in range(n)]
    mirror = draw(st.booleans()) if mirror_comm is None else mirror_comm
    comm = None
    if not mirror:
        comm_pairs = random_connected_edges(rng, n)
        comm = tuple((i, j, draw(pos)) for i, j in comm_pairs)
    return NetworkModel(
        n=n, edges=tuple((i, j, r) for (i, j), r in zip(edges, R)), capacitances=tuple(caps), comm_edges=comm
    )


@st.composite
def params_for(draw, n, uniform_kp=False):
    pos = st.floats(0.05, 20.0, allow_nan=False)
    K_P = [draw(pos)] * n if uniform_kp else [draw(pos) for _ in range(n)]
    return ControllerParams(
        K_P=tuple(K_P),
        K_V=tuple(draw(pos) for _ in range(n)),
        gamma=draw(pos),
        delta=draw(pos),
        V_nom=tuple(draw(st.floats(-10, 10)) for _ in range(n)),
    )
