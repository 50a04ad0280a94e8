"""
Concurrent runtime for typestate objects, interpreted over the matching automaton.

Mailbox holds the automaton state and the per-tag queues and knows how to
receive a message and consume a join pattern; it has no locking of its own.
ObjectInstance wraps a Mailbox with one lock and one condition per operation:

  send_state        enqueue, follow the receive edge, wake invokers whose
                    reactions became fireable; never blocks, never fires
  invoke_operation  phase 1: enqueue and follow the receive edge
                    phase 2: wait until a reaction holding this operation can
                    fire, consume its pattern, release the lock, run the body

A missing receive edge raises ProtocolViolation once the lock is released. The
offending message stays enqueued.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .automaton import MatchingAutomaton, fireable
from .errors import ProtocolViolation
from .handlers.actions import ActionHandler
from .handlers.base import ReactionHandler
from .handlers.callback import CallbackHandler
from .queues import Carried, queue_kind
from .spec import MessageKind, ObjectSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Step:
    """One automaton move: kind is "receive", "consume" or "violation"."""

    kind: str
    source: int
    label: str               # tag, or reaction name for consumes
    target: Optional[int]


@dataclass(frozen=True)
class Snapshot:
    state: int
    counters: dict
    occupancy: dict          # tag -> messages held, None when not tracked by a queue


class Mailbox:

    def __init__(self, spec: ObjectSpec, automaton: MatchingAutomaton, record: bool = False):
        self.spec      = spec
        self.automaton = automaton
        self.state     = automaton.initial
        self.queues    = {
            tag: queue_kind(
                automaton.bound_of(tag),
                spec.message(tag).arity,
                spec.message(tag).kind is MessageKind.OPERATION,
            )()
            for tag in automaton.signature
        }
        self.steps = [] if record else None

    def _record(self, kind: str, source: int, label: str, target: Optional[int]) -> None:
        if self.steps is not None:
            self.steps.append(Step(kind, source, label, target))

    def receive(self, tag: str, payload: tuple) -> bool:
        """Store a message and follow its receive edge. False means violation."""
        self.queues[tag].put(payload)
        target = self.automaton.receive(self.state, tag)
        if target is None:
            logger.debug("%s: no '%s' edge from state %d", self.spec.name, tag, self.state)
            self._record("violation", self.state, tag, None)
            return False
        logger.debug("%s: state %d --%s--> %d", self.spec.name, self.state, tag, target)
        self._record("receive", self.state, tag, target)
        self.state = target
        return True

    def ready(self, tag: str) -> Optional[int]:
        """Highest-priority reaction that can fire now and holds `tag`."""
        for index in fireable(self.automaton, self.state):
            if tag in self.automaton.reactions[index].pattern:
                return index
        return None

    def consume(self, index: int, carried: tuple = ()) -> tuple:
        """
        Remove the join pattern of reaction `index` from the queues and move
        along the matching consume edge.

        Args:
            index:   A reaction that can fire in the current state
            carried: Payload of the invoking operation, used when its queue
                     representation is Carried

        Returns:
            The bound payloads concatenated in pattern order
        """
        reaction = self.spec.reactions[index]
        args = []
        for item in reaction.pattern:
            queue = self.queues[item.tag]
            args.extend(carried if isinstance(queue, Carried) else queue.take())

        emptied = {
            tag: self.queues[tag].is_empty()
            for tag in reaction.tags
            if self.automaton.bound_of(tag).unbounded
        }
        target = self.automaton.consume_target(self.state, index, emptied)
        name   = self.spec.reaction_names[index]
        logger.debug("%s: state %d ==%s==> %d", self.spec.name, self.state, name, target)
        self._record("consume", self.state, name, target)
        self.state = target
        return tuple(args)

    def waiting_operations(self) -> set:
        """Operations whose reactions can fire in the current state."""
        return {
            self.spec.operation_of(self.spec.reactions[i])
            for i in fireable(self.automaton, self.state)
        }

    def counters(self) -> dict:
        return self.automaton.counters_of(self.state)

    def snapshot(self) -> Snapshot:
        return Snapshot(
            self.state,
            self.counters(),
            {tag: q.occupancy() for tag, q in self.queues.items()},
        )


HandlerSpec = Union[ReactionHandler, Callable]


def _make_handler(spec: ObjectSpec, index: int, override: Optional[HandlerSpec]) -> ReactionHandler:
    """Return the handler for a reaction: a host override or the DSL body."""
    reaction = spec.reactions[index]
    if override is None:
        return ActionHandler(reaction, index)
    if isinstance(override, ReactionHandler):
        return override
    return CallbackHandler(reaction, index, override)


class ObjectInstance:
    """A live, thread-safe typestate object."""

    def __init__(
        self,
        spec: ObjectSpec,
        automaton: MatchingAutomaton,
        handlers: Optional[dict] = None,
        record: bool = False,
    ):
        """
        Args:
            spec:      Validated object spec
            automaton: Automaton built from spec (shared read-only)
            handlers:  Optional {reaction name or index: callable or ReactionHandler}
            record:    Keep the list of automaton steps taken (see `steps`)
        """
        self.spec      = spec
        self.automaton = automaton
        self._mailbox  = Mailbox(spec, automaton, record)
        self._lock     = threading.Lock()
        self._waiters  = {op: threading.Condition(self._lock) for op in spec.operations}

        handlers = handlers or {}
        names    = spec.reaction_names
        for key in handlers:
            if not any(key in (i, name) for i, name in enumerate(names)):
                raise ValueError(f"{spec.name} has no reaction {key!r}")
        self._handlers = [
            _make_handler(spec, i, handlers.get(i, handlers.get(name)))
            for i, name in enumerate(names)
        ]

    @property
    def state(self) -> int:
        with self._lock:
            return self._mailbox.state

    @property
    def steps(self) -> list:
        with self._lock:
            return list(self._mailbox.steps or [])

    def _check(self, tag: str, kind: MessageKind, payload: tuple) -> None:
        try:
            msg = self.spec.message(tag)
        except KeyError:
            raise ValueError(f"{self.spec.name} has no message '{tag}'") from None
        if msg.kind is not kind:
            raise ValueError(f"'{tag}' is a {msg.kind.value} message, not a {kind.value}")
        if len(payload) != msg.arity:
            raise TypeError(f"'{tag}' takes {msg.arity} argument(s), got {len(payload)}")

    def _notify(self) -> None:
        for op in self._mailbox.waiting_operations():
            self._waiters[op].notify_all()

    def send_state(self, tag: str, *payload) -> None:
        self._check(tag, MessageKind.STATE, payload)
        violation = None
        with self._lock:
            source = self._mailbox.state
            if not self._mailbox.receive(tag, payload):
                violation = self._mailbox.counters()
            elif self._mailbox.state != source:
                self._notify()
        if violation is not None:
            raise ProtocolViolation(self.spec.name, tag, violation)

    def invoke_operation(self, tag: str, *payload):
        self._check(tag, MessageKind.OPERATION, payload)
        violation = None
        with self._lock:
            if not self._mailbox.receive(tag, payload):
                violation = self._mailbox.counters()
            else:
                index = self._mailbox.ready(tag)
                while index is None:
                    self._waiters[tag].wait()
                    index = self._mailbox.ready(tag)
                args = self._mailbox.consume(index, payload)
                self._notify()
        if violation is not None:
            raise ProtocolViolation(self.spec.name, tag, violation)
        return self._handlers[index].fire(self, args)

    def snapshot(self) -> Snapshot:
        with self._lock:
            return self._mailbox.snapshot()


def instantiate(
    spec: ObjectSpec,
    automaton: MatchingAutomaton,
    handlers: Optional[dict] = None,
    run_init: bool = True,
    record: bool = False,
) -> ObjectInstance:
    """
    Create an object in the initial state and run its constructor sends.

    Raises:
        ProtocolViolation if the constructor sends break the protocol
    """
    instance = ObjectInstance(spec, automaton, handlers, record)
    if run_init:
        for send in spec.constructor_sends:
            instance.send_state(send.tag, *send.args)
    logger.debug("Instantiated %s in state %d", spec.name, instance.state)
    return instance
