from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from csitlab.dmc import DiscreteChannelSpec, load_channel

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fading_demo() -> DiscreteChannelSpec:
    return load_channel(CONFIGS / "fading_demo.json")


@pytest.fixture(scope="session")
def state_independent() -> DiscreteChannelSpec:
    return load_channel(CONFIGS / "state_independent.json")


def random_channel(rng: np.random.Generator, max_states=3, max_inputs=3, max_outputs=3) -> DiscreteChannelSpec:
    ns = int(rng.integers(1, max_states + 1))
    nx = int(rng.integers(2, max_inputs + 1))
    ny = int(rng.integers(2, max_outputs + 1))
    cost = np.concatenate([[0.0], rng.uniform(0.2, 2.0, nx - 1)])
    return DiscreteChannelSpec(
        state_dist=rng.dirichlet(np.ones(ns)),
        kernel=rng.dirichlet(np.ones(ny), size=(nx, ns)),
        cost=cost,
    )


@st.composite
def channels(draw, max_states=3, max_inputs=3, max_outputs=3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_channel(np.random.default_rng(seed), max_states, max_inputs, max_outputs)
