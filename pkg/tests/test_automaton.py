import os

import pytest
from hypothesis import HealthCheck, given, settings

from tsop.automaton import (
    AT_LEAST_ONE,
    ConsumeTransition,
    MatchingAutomaton,
    ReceiveTransition,
    build_automaton,
    fireable,
    fireable_reactions,
    firing_states,
    legal_states_oracle,
    raw_state_count,
)
from tsop.errors import AutomatonError
from tsop.semantics import Bound, UNBOUNDED
from tsop.spec import load_spec, parse_spec

from strategies import object_specs

SPECS = os.path.join(os.path.dirname(__file__), "..", "specs")

S = AT_LEAST_ONE

# signature order: EMPTY, FULL, get, put
FUTURE_STATES = [
    (0, 0, 0, 0),
    (1, 0, 0, 0),
    (0, 1, 0, 0),
    (0, 0, S, 0),
    (0, 0, 0, 1),
    (1, 0, S, 0),
    (1, 0, 0, 1),
    (0, 1, S, 0),
    (0, 0, S, 1),
    (1, 0, S, 1),
]


@pytest.fixture(scope="module")
def future():
    spec = load_spec(os.path.join(SPECS, "future.tsop"))
    return spec, build_automaton(spec)


def test_signature_and_bounds(future) -> None:
    _, a = future
    assert a.signature == ("EMPTY", "FULL", "get", "put")
    assert a.bounds == (Bound(1), Bound(1), UNBOUNDED, Bound(1))
    assert a.kinds == ("state", "state", "operation", "operation")


def test_future_states_in_discovery_order(future) -> None:
    _, a = future
    assert [s.counters for s in a.states] == FUTURE_STATES
    assert [s.index for s in a.states] == list(range(10))


def test_future_state_space(future) -> None:
    spec, a = future
    assert raw_state_count(a) == 16
    assert len(a.states) == 10
    assert (1, 1, 0, 0) not in {s.counters for s in a.states}
    assert {s.counters for s in a.states} == legal_states_oracle(spec)


def test_future_receive_edges(future) -> None:
    _, a = future
    edges = {}
    for r in a.receives:
        edges.setdefault(r.tag, {})[r.source] = r.target
    assert edges["EMPTY"] == {0: 1, 3: 5, 4: 6, 8: 9}
    assert edges["FULL"] == {0: 2, 3: 7}
    assert edges["get"] == {0: 3, 1: 5, 2: 7, 3: 3, 4: 8, 5: 5, 6: 9, 7: 7, 8: 8, 9: 9}
    assert edges["put"] == {0: 4, 1: 6, 3: 8, 5: 9}
    assert a.receive(1, "FULL") is None
    assert a.receive(1, "EMPTY") is None


def test_future_firing_states(future) -> None:
    _, a = future
    assert firing_states(a) == [6, 7, 9]
    assert {a.states[i].counters for i in firing_states(a)} == {
        (1, 0, 0, 1), (1, 0, S, 1), (0, 1, S, 0),
    }
    assert fireable(a, 6) == [0]
    assert fireable(a, 7) == [1]
    assert fireable(a, 9) == [0]
    assert fireable(a, 0) == []
    assert fireable_reactions(a) == {0, 1}


def test_future_consume_edges(future) -> None:
    _, a = future
    assert set(a.consumes) == {
        ConsumeTransition(6, 0, (), 0),
        ConsumeTransition(9, 0, (), 3),
        ConsumeTransition(7, 1, (("get", True),), 0),
        ConsumeTransition(7, 1, (("get", False),), 3),
    }
    full_get = [c for c in a.consumes_from(7)]
    assert {a.states[c.target].counters for c in full_get} == {(0, 0, 0, 0), (0, 0, S, 0)}


def test_consume_target(future) -> None:
    _, a = future
    assert a.consume_target(7, 1, {"get": True}) == 0
    assert a.consume_target(7, 1, {"get": False}) == 3
    assert a.consume_target(9, 0, {}) == 3
    with pytest.raises(AutomatonError):
        a.consume_target(0, 0, {})


def test_counters_and_describe(future) -> None:
    _, a = future
    assert a.counters_of(7) == {"EMPTY": 0, "FULL": 1, "get": S, "put": 0}
    assert a.describe(7) == "01$0"
    assert a.describe(0) == "0000"


def test_build_is_deterministic(future) -> None:
    spec, a = future
    assert build_automaton(spec) == a


def test_lock_automaton() -> None:
    spec = load_spec(os.path.join(SPECS, "lock.tsop"))
    a = build_automaton(spec)
    assert a.signature == ("BUSY", "FREE", "acquire", "release")
    assert a.bounds == (Bound(1), Bound(1), UNBOUNDED, Bound(1))
    assert raw_state_count(a) == 16
    assert {s.counters for s in a.states} == legal_states_oracle(spec)
    free = next(s.index for s in a.states if s.counters == (0, 1, 0, 0))
    assert a.receive(free, "release") is None
    busy = next(s.index for s in a.states if s.counters == (1, 0, 0, 0))
    assert a.receive(busy, "release") is not None


def test_protocol_one_has_single_state() -> None:
    spec = parse_spec("""\
object Inert
protocol 1
state PING()
""")
    a = build_automaton(spec)
    assert [s.counters for s in a.states] == [(0,)]
    assert a.receives == ()
    assert a.consumes == ()


def test_two_unbounded_pattern_tags() -> None:
    spec = parse_spec("""\
object Pool
protocol *job . *take
state job(x)
operation take() returns value
reaction job(x) & take() -> return x
""")
    a = build_automaton(spec)
    assert [s.counters for s in a.states] == [(0, 0), (S, 0), (0, S), (S, S)]
    firing = a.consumes_from(3)
    assert [c.emptied for c in firing] == [
        (("job", True), ("take", True)),
        (("job", True), ("take", False)),
        (("job", False), ("take", True)),
        (("job", False), ("take", False)),
    ]
    assert [c.target for c in firing] == [0, 2, 1, 3]


def test_duplicate_receive_is_rejected() -> None:
    with pytest.raises(AutomatonError):
        MatchingAutomaton(
            object_name="X", signature=("a",), kinds=("state",), bounds=(Bound(1),),
            states=(), consumes=(),
            receives=(ReceiveTransition(0, "a", 1), ReceiveTransition(0, "a", 1)),
        )


def assert_violation_is_monotone(a: MatchingAutomaton) -> None:
    """A tag refused in s stays refused in every state reached from s by receiving other tags."""
    for s in a.states:
        for t in a.signature:
            if a.receive(s.index, t) is not None:
                continue
            seen, todo = {s.index}, [s.index]
            while todo:
                state = todo.pop()
                assert a.receive(state, t) is None, f"{t} refused in {s.index} but accepted in {state}"
                for u in a.signature:
                    target = a.receive(state, u)
                    if u != t and target is not None and target not in seen:
                        seen.add(target)
                        todo.append(target)


@pytest.mark.parametrize("name", ["future.tsop", "lock.tsop"])
def test_violation_is_monotone(name) -> None:
    assert_violation_is_monotone(build_automaton(load_spec(os.path.join(SPECS, name))))


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(object_specs())
def test_violation_is_monotone_on_generated_specs(spec) -> None:
    assert_violation_is_monotone(build_automaton(spec))
