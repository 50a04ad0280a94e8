import os
import random
import threading
import time

import pytest

from tsop.automaton import build_automaton
from tsop.errors import ProtocolViolation
from tsop.spec import load_spec

SPECS = os.path.join(os.path.dirname(__file__), "..", "specs")

STRESS_BUDGET = 30.0
PARK_GRACE    = 2.0


@pytest.fixture(scope="session")
def specs_dir() -> str:
    return SPECS


@pytest.fixture(scope="session")
def future_spec():
    return load_spec(os.path.join(SPECS, "future.tsop"))


@pytest.fixture(scope="session")
def future_automaton(future_spec):
    return build_automaton(future_spec)


def _join_all(threads, deadline: float) -> None:
    for t in threads:
        t.join(max(0.0, deadline - time.monotonic()))
        assert not t.is_alive(), "threads still blocked: deadlock or lost wakeup"


@pytest.fixture
def stress_getters():
    """
    run(make, getters, rounds): each round `make()` returns (get, send_empty, put)
    for a fresh, not yet completed future; `getters` threads call get() while
    one thread calls send_empty() then put(round). Every get must return the
    round number.
    """
    def run(make, getters: int = 64, rounds: int = 200) -> None:
        deadline = time.monotonic() + STRESS_BUDGET
        for round_no in range(rounds):
            get, send_empty, put = make()
            results, errors = [], []

            def getter():
                time.sleep(random.random() / 1000)
                try:
                    results.append(get())
                except Exception as exc:
                    errors.append(exc)

            def completer():
                time.sleep(random.random() / 1000)
                try:
                    send_empty()
                    put(round_no)
                except Exception as exc:
                    errors.append(exc)

            threads = [threading.Thread(target=getter, daemon=True) for _ in range(getters)]
            threads.append(threading.Thread(target=completer, daemon=True))
            random.shuffle(threads)
            for t in threads:
                t.start()
            _join_all(threads, deadline)
            assert errors == []
            assert results == [round_no] * getters

    return run


@pytest.fixture
def double_put():
    """
    run(make, trials): each trial `make()` returns put for a future holding
    EMPTY; two threads call put at once. Exactly one violation is raised in
    total. Usually the loser's put raises it and the winner returns; when the
    winner's body has not sent FULL yet, the loser's put parks instead and the
    winner's send of FULL raises. A put still parked after PARK_GRACE counts
    as not ok.
    """
    def run(make, trials: int = 500) -> None:
        deadline = time.monotonic() + STRESS_BUDGET
        for _ in range(trials):
            put = make()
            outcomes = []
            barrier = threading.Barrier(2)

            def worker(value):
                barrier.wait()
                try:
                    put(value)
                    outcomes.append("ok")
                except ProtocolViolation:
                    outcomes.append("violation")

            threads = [threading.Thread(target=worker, args=(v,), daemon=True) for v in (1, 2)]
            for t in threads:
                t.start()
            for t in threads:
                t.join(max(0.0, min(PARK_GRACE, deadline - time.monotonic())))
            parked = [t for t in threads if t.is_alive()]
            if parked:
                assert len(parked) == 1, "both puts blocked"
                assert outcomes == ["violation"]
            else:
                assert sorted(outcomes) == ["ok", "violation"]

    return run
