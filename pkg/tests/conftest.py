from __future__ import annotations

import numpy as np
import pytest

from safegrid.env import EnvConfig, TopologyEnv
from safegrid.fixtures import bundled_case, constant_chronics, stressed_chronics

DESK_ENV = EnvConfig(penalty=0.1, hard_overflow=1.2)


@pytest.fixture(scope="session")
def case2():
    return bundled_case("case2")


@pytest.fixture(scope="session")
def case5():
    return bundled_case("case5")


@pytest.fixture(scope="session")
def case14():
    return bundled_case("case14")


@pytest.fixture(scope="session")
def stressed(case5):
    return stressed_chronics(case5)


@pytest.fixture()
def env5(case5, stressed):
    return TopologyEnv(case5, stressed, DESK_ENV)


@pytest.fixture()
def calm_env(case5):
    """Nominal load all day: the base topology never overloads."""
    return TopologyEnv(case5, constant_chronics(case5, 30, 0.8, horizon=20),
                       EnvConfig(max_episode_length=20))


def run_until_overload(env, offset=0):
    """Do-nothing until the last state before the collapse; returns that transition."""
    from safegrid.env import Action

    s = env.reset(offset)
    while True:
        tr = env.step(s, Action.do_nothing())
        if tr.s_next.terminal:
            return tr
        s = tr.s_next


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


RELIEF_TEXT = "Split substation 3.\nproposed LINE changes: {1 : 0, 2 : 1, 4 : 1}"


@pytest.fixture()
def mock_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("advisor")
    (d / "00.txt").write_text("I am not sure.")
    (d / "01.txt").write_text(RELIEF_TEXT)
    (d / "02.txt").write_text("proposed LINE changes: {}")
    return d


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture()
def criterion():
    """Record one acceptance line; the summary prints them in order."""
    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
