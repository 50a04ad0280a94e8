"""
Scripted interleavings of sends and calls against one object.

Script syntax (grammar.SCRIPT_GRAMMAR; one event per line, `#` comments):

    init                          perform the spec's constructor sends
    send TAG(args)                send a state message
    call ID = TAG(args)           invoke an operation; parks until it can fire
    expect ID returns VALUE       the call completed with VALUE
    expect pending ID             the call is still parked
    expect violation              the previous event raised a protocol violation
    expect counters {tag: n|$}    exact automaton counters, unlisted tags are 0

Arguments and values are Python literals. Scripts start from the empty mailbox;
use `init` to run the constructor sends.

Simulator replays a script deterministically on one thread: after every event
it fires reactions until none can fire, waking parked calls in arrival order.
run_threaded replays the same events on a pool of real threads against an
ObjectInstance and checks only the expectations at the end of the script.
"""

import logging
import queue
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

from lark import UnexpectedInput
from lark.exceptions import VisitError

from .automaton import AT_LEAST_ONE, MatchingAutomaton
from .errors import ExpectationFailed, ProtocolViolation, ScriptError
from .grammar import Literals, script_parser, syntax_error
from .handlers.actions import ActionHandler
from .runtime import Mailbox, instantiate
from .spec import MessageKind, ObjectSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Event:
    kind: str                # init / send / call / returns / pending / violation / counters
    line: int
    tag: Optional[str] = None
    call_id: Optional[str] = None
    args: tuple = ()
    value: Any = None

    @property
    def is_expectation(self) -> bool:
        return self.kind in ("returns", "pending", "violation", "counters")


@dataclass(frozen=True)
class SimScript:
    events: tuple

    def terminal_expectations(self) -> tuple:
        """The expect lines after the last non-expect event."""
        tail = []
        for event in reversed(self.events):
            if not event.is_expectation:
                break
            tail.append(event)
        return tuple(reversed(tail))


class _ScriptBuilder(Literals):
    """Turns a script parse tree into Events, numbered by their source line."""

    def not_literal(self, token) -> Exception:
        return ScriptError(f"not a literal: {token}", token.line)

    def start(self, items):
        return items

    def args(self, items):
        return tuple(items)

    def entry(self, items):
        tag, count = items
        return str(tag), AT_LEAST_ONE if count == AT_LEAST_ONE else int(count)

    def init_event(self, items):
        return Event("init", items[0].line)

    def send_event(self, items):
        keyword, tag, args = items
        return Event("send", keyword.line, tag=str(tag), args=args or ())

    def call_event(self, items):
        keyword, call_id, tag, args = items
        return Event("call", keyword.line, tag=str(tag), call_id=str(call_id), args=args or ())

    def returns_event(self, items):
        keyword, call_id, value = items
        return Event("returns", keyword.line, call_id=str(call_id), value=value)

    def pending_event(self, items):
        keyword, call_id = items
        return Event("pending", keyword.line, call_id=str(call_id))

    def violation_event(self, items):
        return Event("violation", items[0].line)

    def counters_event(self, items):
        keyword, *entries = items
        return Event("counters", keyword.line, value=dict(entries))


def parse_script(text: str, spec: Optional[ObjectSpec] = None) -> SimScript:
    """
    Parse a simulation script; with `spec` also check tags, kinds and arities.

    Raises:
        ScriptError with the offending line number
    """
    try:
        tree = script_parser.parse(text)
    except UnexpectedInput as exc:
        raise ScriptError(*syntax_error(exc, text, "event")) from None
    try:
        parsed = _ScriptBuilder().transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None

    events, calls = [], set()
    for event in parsed:
        if event.kind == "call":
            if event.call_id in calls:
                raise ScriptError(f"call id '{event.call_id}' used twice", event.line)
            calls.add(event.call_id)
        if event.kind in ("pending", "returns") and event.call_id not in calls:
            raise ScriptError(f"'{event.call_id}' does not name an earlier call", event.line)
        if spec is not None:
            _check_event(spec, event)
        events.append(event)

    return SimScript(tuple(events))


def _check_event(spec: ObjectSpec, event: Event) -> None:
    if event.kind == "counters":
        unknown = set(event.value) - set(spec.signature)
        if unknown:
            raise ScriptError(f"unknown tag(s) in counters: {', '.join(sorted(unknown))}", event.line)
    if event.kind not in ("send", "call"):
        return
    try:
        msg = spec.message(event.tag)
    except KeyError:
        raise ScriptError(f"{spec.name} has no message '{event.tag}'", event.line) from None
    wanted = MessageKind.STATE if event.kind == "send" else MessageKind.OPERATION
    if msg.kind is not wanted:
        raise ScriptError(f"'{event.tag}' is a {msg.kind.value} message, use "
                          f"'{'send' if msg.kind is MessageKind.STATE else 'call'}'", event.line)
    if len(event.args) != msg.arity:
        raise ScriptError(f"'{event.tag}' takes {msg.arity} argument(s), got {len(event.args)}", event.line)


def load_script(path: str, spec: Optional[ObjectSpec] = None) -> SimScript:
    with open(path, encoding="utf-8") as f:
        return parse_script(f.read(), spec)


# ---------------------------------------------------------------------------
# Deterministic simulation
# ---------------------------------------------------------------------------

@dataclass
class Call:
    call_id: Optional[str]   # None for operations invoked from reaction bodies
    tag: str
    args: tuple
    status: str = "pending"  # pending / returned / violation
    result: Any = None


@dataclass
class SimResult:
    trace: list = field(default_factory=list)
    calls: dict = field(default_factory=dict)
    violations: int = 0
    counters: dict = field(default_factory=dict)


class _BodyHandle:
    """What a reaction body sees as `self` inside the simulator."""

    def __init__(self, sim: "Simulator"):
        self.spec = sim.spec
        self._sim = sim

    def send_state(self, tag: str, *payload) -> None:
        self._sim._receive(tag, payload)

    def invoke_operation(self, tag: str, *payload):
        # parks like any other call; the body does not wait for it
        self._sim._call(None, tag, payload)
        return None


class Simulator:

    def __init__(self, spec: ObjectSpec, automaton: MatchingAutomaton):
        self.spec      = spec
        self.automaton = automaton
        self.mailbox   = Mailbox(spec, automaton)
        self.handlers  = [ActionHandler(r, i) for i, r in enumerate(spec.reactions)]
        self.parked    = []
        self.result    = SimResult()
        self._handle   = _BodyHandle(self)
        self._violated = 0

    def _emit(self, line: str) -> None:
        logger.debug("%s", line)
        self.result.trace.append(line)

    def _receive(self, tag: str, payload: tuple) -> bool:
        source = self.mailbox.state
        if self.mailbox.receive(tag, payload):
            self._emit(f"state#{source} --{tag}--> state#{self.mailbox.state}")
            return True
        self._emit(f"state#{source} --{tag}--> violation")
        self._violated += 1
        self.result.violations += 1
        return False

    def _call(self, call_id: Optional[str], tag: str, args: tuple) -> Call:
        call = Call(call_id, tag, args)
        if call_id is not None:
            self.result.calls[call_id] = call
        if self._receive(tag, args):
            self.parked.append(call)
        else:
            call.status = "violation"
        return call

    def _settle(self) -> None:
        """Fire reactions until no parked call can proceed."""
        progress = True
        while progress:
            progress = False
            for call in list(self.parked):
                index = self.mailbox.ready(call.tag)
                if index is None:
                    continue
                self.parked.remove(call)
                source = self.mailbox.state
                bound = self.mailbox.consume(index, call.args)
                self._emit(
                    f"fire reaction#{index} ({self.spec.reaction_names[index]}): "
                    f"state#{source} -> state#{self.mailbox.state}"
                )
                call.result = self.handlers[index].fire(self._handle, bound)
                call.status = "returned"
                progress = True
                break

    def step(self, event: Event) -> None:
        """Apply one non-expect event and settle."""
        self._violated = 0
        if event.kind == "init":
            for send in self.spec.constructor_sends:
                self._receive(send.tag, send.args)
        elif event.kind == "send":
            self._receive(event.tag, event.args)
        elif event.kind == "call":
            self._call(event.call_id, event.tag, event.args)
        self._settle()

    def check(self, event: Event, last_violations: int) -> None:
        """Assert one expectation; raise ExpectationFailed on mismatch."""
        if event.kind == "violation":
            if not last_violations:
                raise ExpectationFailed("expected a protocol violation, none occurred", event.line)
        elif event.kind == "pending":
            call = self.result.calls[event.call_id]
            if call.status != "pending":
                raise ExpectationFailed(f"'{event.call_id}' is {call.status}, expected pending", event.line)
        elif event.kind == "returns":
            call = self.result.calls[event.call_id]
            if call.status != "returned":
                raise ExpectationFailed(f"'{event.call_id}' is {call.status}, expected it to return", event.line)
            if call.result != event.value:
                raise ExpectationFailed(
                    f"'{event.call_id}' returned {call.result!r}, expected {event.value!r}", event.line
                )
        elif event.kind == "counters":
            _check_counters(self.mailbox.counters(), event)

    def run(self, script: SimScript) -> SimResult:
        """
        Replay `script`.

        Raises:
            ExpectationFailed on the first expectation that does not hold;
            the trace gathered so far stays available on `self.result`
        """
        last_violations = 0
        for event in script.events:
            if event.is_expectation:
                self.check(event, last_violations)
            else:
                self.step(event)
                last_violations = self._violated
        self.result.counters = self.mailbox.counters()
        return self.result


def _check_counters(actual: dict, event: Event) -> None:
    expected = {tag: event.value.get(tag, 0) for tag in actual}
    if actual != expected:
        shown = ", ".join(f"{t}: {c}" for t, c in actual.items())
        raise ExpectationFailed(f"counters are {{{shown}}}", event.line)


def simulate(spec: ObjectSpec, automaton: MatchingAutomaton, script: SimScript) -> SimResult:
    return Simulator(spec, automaton).run(script)


# ---------------------------------------------------------------------------
# Stress mode
# ---------------------------------------------------------------------------

def run_threaded(
    spec: ObjectSpec,
    automaton: MatchingAutomaton,
    script: SimScript,
    threads: int,
    join_timeout: float = 5.0,
) -> SimResult:
    """
    Replay the script's events on `threads` worker threads sharing one
    ObjectInstance, then check the terminal expectations.

    Events are handed out in script order but run concurrently, so only the
    outcome at the end is meaningful. Calls still blocked after join_timeout
    count as pending.

    Raises:
        ExpectationFailed if a terminal expectation does not hold
    """
    if threads < 1:
        raise ValueError("threads must be at least 1")
    instance = instantiate(spec, automaton, run_init=False)
    result   = SimResult()
    guard    = threading.Lock()
    inbox    = queue.Queue()

    for event in script.events:
        if event.kind == "call":
            result.calls[event.call_id] = Call(event.call_id, event.tag, event.args)

    def perform(event: Event) -> None:
        try:
            if event.kind == "init":
                for send in spec.constructor_sends:
                    instance.send_state(send.tag, *send.args)
            elif event.kind == "send":
                instance.send_state(event.tag, *event.args)
            else:
                call = result.calls[event.call_id]
                call.result = instance.invoke_operation(event.tag, *event.args)
                call.status = "returned"
        except ProtocolViolation as exc:
            logger.debug("%s", exc)
            with guard:
                result.violations += 1
            if event.kind == "call":
                result.calls[event.call_id].status = "violation"

    def work() -> None:
        while (event := inbox.get()) is not None:
            perform(event)

    workers = [threading.Thread(target=work, daemon=True) for _ in range(threads)]
    for t in workers:
        t.start()
    for event in script.events:
        if not event.is_expectation:
            inbox.put(event)
    for _ in workers:
        inbox.put(None)
    for t in workers:
        t.join(join_timeout)

    stuck = sum(t.is_alive() for t in workers)
    if stuck:
        logger.info("%d worker(s) still blocked after %.1fs", stuck, join_timeout)

    result.counters = instance.snapshot().counters
    for event in script.terminal_expectations():
        if event.kind == "violation":
            if not result.violations:
                raise ExpectationFailed("expected a protocol violation, none occurred", event.line)
        elif event.kind == "counters":
            _check_counters(result.counters, event)
        else:
            call = result.calls[event.call_id]
            wanted = "pending" if event.kind == "pending" else "returned"
            if call.status != wanted:
                raise ExpectationFailed(f"'{event.call_id}' is {call.status}, expected {wanted}", event.line)
            if event.kind == "returns" and call.result != event.value:
                raise ExpectationFailed(
                    f"'{event.call_id}' returned {call.result!r}, expected {event.value!r}", event.line
                )
    return result
