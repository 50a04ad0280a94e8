import os
import threading
import time

import pytest

from tsop.automaton import build_automaton
from tsop.errors import ProtocolViolation
from tsop.handlers.base import ReactionHandler
from tsop.queues import Carried, CounterQueue, FifoQueue, NoQueue, SlotQueue, queue_kind
from tsop.runtime import ObjectInstance, instantiate
from tsop.semantics import UNBOUNDED, Bound
from tsop.spec import load_spec, parse_spec


DUP = """\
object Dup
protocol *get . (A + B)
state A(x)
state B(x)
operation get() returns value
reaction A(x) & get() -> A(x), return x
reaction A(x) & get() -> B(x), return x
init A(1)
"""


def call_in_thread(fn, *args):
    box = {}

    def run():
        try:
            box["result"] = fn(*args)
        except Exception as exc:
            box["error"] = exc

    t = threading.Thread(target=run, daemon=True)
    t.start()
    return t, box


# ---------------------------------------------------------------------------
# Queue representations
# ---------------------------------------------------------------------------

def test_queue_kind_rules() -> None:
    assert queue_kind(Bound(1), 0, False) is NoQueue
    assert queue_kind(Bound(2), 0, True) is NoQueue
    assert queue_kind(UNBOUNDED, 0, True) is CounterQueue
    assert queue_kind(Bound(1), 1, False) is SlotQueue
    assert queue_kind(Bound(1), 2, False) is SlotQueue
    assert queue_kind(Bound(1), 1, True) is Carried
    assert queue_kind(Bound(2), 1, False) is FifoQueue
    assert queue_kind(UNBOUNDED, 1, True) is FifoQueue


def test_queue_behaviour() -> None:
    fifo = FifoQueue()
    fifo.put((1,))
    fifo.put((2,))
    assert fifo.occupancy() == 2
    assert fifo.take() == (1,)
    counter = CounterQueue()
    counter.put(())
    assert not counter.is_empty()
    counter.take()
    assert counter.is_empty()
    slot = SlotQueue()
    slot.put(("v",))
    assert slot.occupancy() == 1
    assert slot.take() == ("v",)
    assert slot.occupancy() == 0
    assert NoQueue().occupancy() is None


def test_future_queue_fields(future_spec, future_automaton) -> None:
    snap = instantiate(future_spec, future_automaton).snapshot()
    assert snap.occupancy == {"EMPTY": None, "FULL": 0, "get": 0, "put": None}


# ---------------------------------------------------------------------------
# Instantiation and sends
# ---------------------------------------------------------------------------

def test_instantiate_runs_constructor_sends(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton)
    snap = obj.snapshot()
    assert snap.state == 1
    assert snap.counters == {"EMPTY": 1, "FULL": 0, "get": 0, "put": 0}


def test_instantiate_without_init(future_spec, future_automaton) -> None:
    assert instantiate(future_spec, future_automaton, run_init=False).state == 0


def test_send_state(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton, run_init=False)
    obj.send_state("EMPTY")
    assert obj.state == 1


def test_send_state_violation(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton)
    with pytest.raises(ProtocolViolation) as info:
        obj.send_state("FULL", 3)
    assert info.value.object_name == "Future"
    assert info.value.tag == "FULL"
    assert info.value.counters == {"EMPTY": 1, "FULL": 0, "get": 0, "put": 0}
    assert "protocol violation on 'FULL'" in str(info.value)
    # the message stays enqueued and the object stays usable
    snap = obj.snapshot()
    assert snap.state == 1
    assert snap.occupancy["FULL"] == 1


def test_message_checks(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton)
    with pytest.raises(ValueError):
        obj.send_state("put", 1)
    with pytest.raises(ValueError):
        obj.invoke_operation("EMPTY")
    with pytest.raises(ValueError):
        obj.send_state("NOPE")
    with pytest.raises(TypeError):
        obj.send_state("FULL")
    with pytest.raises(TypeError):
        obj.invoke_operation("put")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def test_put_then_get(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton)
    assert obj.invoke_operation("put", 7) is None
    assert obj.snapshot().counters == {"EMPTY": 0, "FULL": 1, "get": 0, "put": 0}
    assert obj.invoke_operation("get") == 7
    assert obj.invoke_operation("get") == 7
    assert obj.snapshot().counters == {"EMPTY": 0, "FULL": 1, "get": 0, "put": 0}


def test_get_blocks_until_put(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton)
    t, box = call_in_thread(obj.invoke_operation, "get")
    time.sleep(0.05)
    assert t.is_alive()
    assert obj.snapshot().counters["get"] == "$"
    obj.invoke_operation("put", "done")
    t.join(5)
    assert not t.is_alive()
    assert box == {"result": "done"}


def test_second_put_is_violation(future_spec, future_automaton) -> None:
    obj = instantiate(future_spec, future_automaton)
    obj.invoke_operation("put", 1)
    with pytest.raises(ProtocolViolation):
        obj.invoke_operation("put", 2)
    assert obj.invoke_operation("get") == 1


def test_recorded_steps_follow_automaton(future_spec, future_automaton) -> None:
    a = future_automaton
    obj = instantiate(future_spec, a, run_init=False, record=True)
    getters = [call_in_thread(obj.invoke_operation, "get") for _ in range(8)]
    obj.send_state("EMPTY")
    obj.invoke_operation("put", 3)
    for t, box in getters:
        t.join(5)
        assert box == {"result": 3}

    names = [r.name for r in future_spec.reactions]
    state = a.initial
    for step in obj.steps:
        assert step.source == state
        if step.kind == "receive":
            assert a.receive(step.source, step.label) == step.target
        elif step.kind == "consume":
            targets = {c.target for c in a.consumes_from(step.source) if names[c.reaction] == step.label}
            assert step.target in targets
        state = step.target if step.target is not None else state
    assert sum(step.kind == "consume" for step in obj.steps) == 9


def test_host_callback_handler(future_spec, future_automaton) -> None:
    seen = []

    def doubled(handle, x):
        seen.append(x)
        return x * 2

    obj = instantiate(future_spec, future_automaton, handlers={"when_FULL_get": doubled})
    obj.invoke_operation("put", 21)
    assert obj.invoke_operation("get") == 42
    assert seen == [21]
    assert obj.snapshot().counters["FULL"] == 0


def test_handler_by_index_and_class(future_spec, future_automaton) -> None:
    class Echo(ReactionHandler):
        def fire(self, handle, args):
            handle.send_state("FULL", *args)
            return ("echo",) + args

    obj = ObjectInstance(future_spec, future_automaton, handlers={1: Echo(future_spec.reactions[1], 1)})
    obj.send_state("EMPTY")
    obj.invoke_operation("put", 5)
    assert obj.invoke_operation("get") == ("echo", 5)


def test_unknown_handler_key(future_spec, future_automaton) -> None:
    with pytest.raises(ValueError):
        ObjectInstance(future_spec, future_automaton, handlers={"when_nothing": lambda h: None})


def test_lock_object(specs_dir) -> None:
    spec = load_spec(os.path.join(specs_dir, "lock.tsop"))
    lock = instantiate(spec, build_automaton(spec))
    lock.invoke_operation("acquire")
    t, box = call_in_thread(lock.invoke_operation, "acquire")
    time.sleep(0.05)
    assert t.is_alive()
    lock.invoke_operation("release")
    t.join(5)
    assert box == {"result": None}
    lock.invoke_operation("release")
    with pytest.raises(ProtocolViolation):
        lock.invoke_operation("release")


def test_body_invoking_operation_does_not_deadlock() -> None:
    spec = parse_spec("""\
object Relay
protocol *go . *hop . *DONE
state DONE()
operation go()
operation hop()
reaction go() -> hop()
reaction hop() -> DONE()
""")
    obj = instantiate(spec, build_automaton(spec))
    t, box = call_in_thread(obj.invoke_operation, "go")
    t.join(5)
    assert not t.is_alive()
    assert box == {"result": None}
    assert obj.snapshot().counters["DONE"] == "$"


# ---------------------------------------------------------------------------
# Concurrency
# ---------------------------------------------------------------------------

def test_many_getters_one_putter(future_spec, future_automaton, stress_getters) -> None:
    def make():
        obj = instantiate(future_spec, future_automaton, run_init=False)
        return (
            lambda: obj.invoke_operation("get"),
            lambda: obj.send_state("EMPTY"),
            lambda v: obj.invoke_operation("put", v),
        )

    stress_getters(make)


def test_double_completion(future_spec, future_automaton, double_put) -> None:
    def make():
        obj = instantiate(future_spec, future_automaton)
        return lambda v: obj.invoke_operation("put", v)

    double_put(make)


def test_double_completion_with_slow_body(future_spec, future_automaton, double_put) -> None:
    # the loser's put lands between the winner's consume and its FULL send
    def slow(handle, x):
        time.sleep(0.2)
        handle.send_state("FULL", x)

    def make():
        obj = instantiate(future_spec, future_automaton, handlers={"when_EMPTY_put": slow})
        return lambda v: obj.invoke_operation("put", v)

    double_put(make, trials=3)


def test_duplicate_patterns_get_distinct_handler_keys() -> None:
    spec = parse_spec(DUP)
    assert spec.reaction_names == ("when_A_get", "when_A_get_1")
    obj = instantiate(spec, build_automaton(spec), handlers={"when_A_get_1": lambda h, x: -1})
    assert obj.invoke_operation("get") == 1
    assert obj.snapshot().counters == {"A": 1, "B": 0, "get": 0}
