"""
Python source generator for typestate objects.

Expands an ObjectSpec and its matching automaton into a self-contained class
with the same behavior as runtime.ObjectInstance, with the transition tables
unrolled into if/elif chains:

  _TAG(...)     one non-public method per state message: enqueue, switch on
                the current state, wake waiters or raise ProtocolViolation
  tag(...)      one public method per operation: the same switch (phase 1),
                then a wait loop that consumes a join pattern and calls the
                reaction once the lock is released (phase 2)
  _when_...     one non-public method per reaction with its body translated
                to self-sends

Member names come from plan(): when a generated name is already taken (a state
called `lock` against the `_lock` field, two reactions on the same join
pattern) it gets `_` appended until it is free.

The queue fields follow queues.queue_kind(); tags whose messages need no queue
get no field.
"""

import difflib
import hashlib
import keyword
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass

from .automaton import MatchingAutomaton, fireable
from .queues import Carried, CounterQueue, FifoQueue, SlotQueue, queue_kind
from .spec import MessageKind, ObjectSpec, pretty_print

logger = logging.getLogger(__name__)

_RESERVED = {"self", "state", "ProtocolViolation", "_COUNTERS"}


@dataclass(frozen=True)
class Case:
    """One non-loop receive transition of a message method."""

    source: int
    target: int
    notify: tuple            # operations whose waiters are woken


@dataclass(frozen=True)
class ConsumeEdge:
    emptied: tuple           # ((unbounded tag, emptied?), ...)
    target: int
    notify: tuple


@dataclass(frozen=True)
class Firing:
    """What an operation does when it finds the object in a firing state."""

    state: int
    reaction: int
    edges: tuple             # of ConsumeEdge


@dataclass(frozen=True)
class MethodPlan:
    tag: str
    kind: MessageKind
    params: tuple
    cases: tuple
    loops: tuple             # states with a self-loop on this tag
    violating: tuple         # states without a receive edge for this tag
    firings: tuple = ()      # operations only


@dataclass(frozen=True)
class GenPlan:
    object_name: str
    queues: dict             # tag -> queue kind name
    counters: tuple          # per state: {tag: count}
    methods: tuple           # of MethodPlan, declaration order
    reaction_names: tuple
    members: dict            # ("lock",) ("state",) ("try", op) ("queue", tag) ("method", tag) ("reaction", i) -> name

    def member(self, *key) -> str:
        return self.members[key]


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------

def _woken(spec: ObjectSpec, a: MatchingAutomaton, state: int) -> tuple:
    ops = {spec.operation_of(spec.reactions[i]) for i in fireable(a, state)}
    return tuple(op for op in spec.operations if op in ops)


def _members(spec: ObjectSpec) -> dict:
    taken, members = {"__init__"}, {}

    def claim(key: tuple, name: str) -> None:
        while keyword.iskeyword(name) or name in taken:
            name += "_"
        taken.add(name)
        members[key] = name

    claim(("lock",), "_lock")
    claim(("state",), "_state")
    for op in spec.operations:
        claim(("try", op), f"_try_{op}")
    for tag in spec.signature:
        claim(("queue", tag), f"_queue_{tag}")
    for op in spec.operations:
        claim(("method", op), op)
    for tag in spec.states:
        claim(("method", tag), f"_{tag}")
    for i, name in enumerate(spec.reaction_names):
        claim(("reaction", i), f"_{name}")
    return members


def plan(spec: ObjectSpec, a: MatchingAutomaton) -> GenPlan:
    """Collect every table the emitted class needs."""
    queues = {
        tag: queue_kind(a.bound_of(tag), spec.message(tag).arity,
                        spec.message(tag).kind is MessageKind.OPERATION).kind
        for tag in a.signature
    }

    methods = []
    for msg in spec.messages:
        is_state = msg.kind is MessageKind.STATE
        cases, loops, violating = [], [], []
        for s in a.states:
            target = a.receive(s.index, msg.tag)
            if target is None:
                violating.append(s.index)
            elif target == s.index:
                loops.append(s.index)
            else:
                notify = _woken(spec, a, target) if is_state else ()
                cases.append(Case(s.index, target, notify))

        firings = []
        if not is_state:
            for s in a.states:
                chosen = next(
                    (i for i in fireable(a, s.index) if msg.tag in a.reactions[i].pattern), None
                )
                if chosen is None:
                    continue
                edges = tuple(
                    ConsumeEdge(c.emptied, c.target, _woken(spec, a, c.target))
                    for c in a.consumes_from(s.index) if c.reaction == chosen
                )
                firings.append(Firing(s.index, chosen, edges))

        methods.append(MethodPlan(
            msg.tag, msg.kind, msg.params,
            tuple(cases), tuple(loops), tuple(violating), tuple(firings),
        ))

    return GenPlan(
        object_name=spec.name,
        queues=queues,
        counters=tuple(a.counters_of(s.index) for s in a.states),
        methods=tuple(methods),
        reaction_names=spec.reaction_names,
        members=_members(spec),
    )


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

class _Writer:

    def __init__(self):
        self.lines = []
        self.depth = 0

    def line(self, text: str = "") -> None:
        self.lines.append(("    " * self.depth + text) if text else "")

    @contextmanager
    def block(self, header: str):
        self.line(header)
        self.depth += 1
        try:
            yield
        finally:
            self.depth -= 1

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _py_name(name: str, taken: set = frozenset()) -> str:
    """A local name that is no keyword, no reserved word and not already taken."""
    while keyword.iskeyword(name) or name in _RESERVED or name in taken:
        name += "_"
    return name


def _signature(params: tuple) -> str:
    return ", ".join(("self",) + params)


def _packed(names: tuple) -> str:
    return names[0] if len(names) == 1 else f"({', '.join(names)})"


def _emit_enqueue(w: _Writer, gp: GenPlan, tag: str, params: tuple) -> None:
    kind, field = gp.queues[tag], f"self.{gp.member('queue', tag)}"
    if kind == CounterQueue.kind:
        w.line(f"{field} += 1")
    elif kind == SlotQueue.kind:
        w.line(f"{field} = {_packed(params)}")
    elif kind == FifoQueue.kind:
        w.line(f"{field}.append({_packed(params)})")


def _emit_dequeue(w: _Writer, gp: GenPlan, tag: str, names: tuple) -> None:
    kind, field = gp.queues[tag], f"self.{gp.member('queue', tag)}"
    if kind == CounterQueue.kind:
        w.line(f"{field} -= 1")
    elif kind == SlotQueue.kind:
        if names:
            w.line(f"{', '.join(names)} = {field}")
        w.line(f"{field} = None")
    elif kind == FifoQueue.kind:
        if names:
            w.line(f"{', '.join(names)} = {field}.popleft()")
        else:
            w.line(f"{field}.popleft()")


def _emit_move(w: _Writer, gp: GenPlan, target: int, notify: tuple) -> None:
    w.line(f"self.{gp.member('state')} = {target}")
    for op in notify:
        w.line(f"self.{gp.member('try', op)}.notify_all()")


def _emit_violation(w: _Writer, gp: GenPlan, tag: str) -> None:
    name = gp.object_name
    w.line(f"self.{gp.member('lock')}.release()")
    w.line(f"raise ProtocolViolation({name!r}, {tag!r}, _COUNTERS[state])")


def _emit_switch(w: _Writer, gp: GenPlan, m: MethodPlan) -> None:
    """The receive switch shared by state methods and operation phase 1."""
    clauses = [(f"state == {c.source}", c) for c in m.cases]
    if m.violating and m.loops:
        states = ", ".join(str(s) for s in m.loops)
        clauses.append((f"state == {states}" if len(m.loops) == 1 else f"state in ({states})", None))

    if not clauses and m.violating:
        _emit_violation(w, gp, m.tag)
        return

    for i, (condition, case) in enumerate(clauses):
        with w.block(f"{'if' if i == 0 else 'elif'} {condition}:"):
            if case is None:
                w.line("pass")
            else:
                _emit_move(w, gp, case.target, case.notify)
    if m.violating:
        with w.block("else:"):
            _emit_violation(w, gp, m.tag)


def _empty_check(gp: GenPlan, tag: str, emptied: bool) -> str:
    kind, field = gp.queues[tag], f"self.{gp.member('queue', tag)}"
    if kind == CounterQueue.kind:
        return f"{field} == 0" if emptied else f"{field} > 0"
    return f"not {field}" if emptied else field


def _emit_firing(w: _Writer, spec: ObjectSpec, gp: GenPlan, m: MethodPlan, f: Firing) -> None:
    reaction = spec.reactions[f.reaction]
    params   = tuple(_py_name(p) for p in m.params)
    taken    = set(params)
    args     = []
    for item in reaction.pattern:
        kind = gp.queues[item.tag]
        if kind == Carried.kind:
            args.extend(params)
            continue
        names = []
        for b in item.bindings:
            local = _py_name(b, taken)
            taken.add(local)
            names.append(local)
        _emit_dequeue(w, gp, item.tag, tuple(names))
        args.extend(names)

    if len(f.edges) == 1:
        _emit_move(w, gp, f.edges[0].target, f.edges[0].notify)
    else:
        for i, edge in enumerate(f.edges):
            if i == len(f.edges) - 1:
                header = "else:"
            else:
                condition = " and ".join(
                    _empty_check(gp, t, flag) for t, flag in edge.emptied
                )
                header = f"{'if' if i == 0 else 'elif'} {condition}:"
            with w.block(header):
                _emit_move(w, gp, edge.target, edge.notify)

    w.line(f"self.{gp.member('lock')}.release()")
    w.line(f"return self.{gp.member('reaction', f.reaction)}({', '.join(args)})")


def _emit_state_method(w: _Writer, gp: GenPlan, m: MethodPlan) -> None:
    params = tuple(_py_name(p) for p in m.params)
    lock   = f"self.{gp.member('lock')}"
    with w.block(f"def {gp.member('method', m.tag)}({_signature(params)}):"):
        w.line(f"{lock}.acquire()")
        _emit_enqueue(w, gp, m.tag, params)
        w.line(f"state = self.{gp.member('state')}")
        _emit_switch(w, gp, m)
        if m.cases or m.loops:
            w.line(f"{lock}.release()")


def _emit_operation_method(w: _Writer, spec: ObjectSpec, gp: GenPlan, m: MethodPlan) -> None:
    params = tuple(_py_name(p) for p in m.params)
    with w.block(f"def {gp.member('method', m.tag)}({_signature(params)}):"):
        w.line(f"self.{gp.member('lock')}.acquire()")
        _emit_enqueue(w, gp, m.tag, params)
        w.line(f"state = self.{gp.member('state')}")
        _emit_switch(w, gp, m)
        if not (m.cases or m.loops):
            return
        with w.block("while True:"):
            w.line(f"state = self.{gp.member('state')}")
            for i, f in enumerate(m.firings):
                with w.block(f"{'if' if i == 0 else 'elif'} state == {f.state}:"):
                    _emit_firing(w, spec, gp, m, f)
            w.line(f"self.{gp.member('try', m.tag)}.wait()")


def _emit_reaction(w: _Writer, spec: ObjectSpec, gp: GenPlan, index: int) -> None:
    reaction = spec.reactions[index]
    names    = {}
    for b in reaction.bindings:
        names[b] = _py_name(b, set(names.values()))
    with w.block(f"def {gp.member('reaction', index)}({_signature(tuple(names.values()))}):"):
        for send in reaction.body:
            args = ", ".join(names[x] for x in send.args)
            w.line(f"self.{gp.member('method', send.tag)}({args})")
        if reaction.returns is not None:
            w.line(f"return {names[reaction.returns]}")
        elif not reaction.body:
            w.line("pass")


def spec_digest(spec: ObjectSpec) -> str:
    """sha256 of the spec's source text (its pretty-printed form when built in code)."""
    text = spec.source if spec.source is not None else pretty_print(spec)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def generate_source(spec: ObjectSpec, a: MatchingAutomaton) -> str:
    """
    Emit the Python module implementing `spec`.

    The output depends only on its inputs, so regenerating an unchanged spec
    yields identical bytes.
    """
    gp = plan(spec, a)
    w  = _Writer()

    w.line(f"# Generated by tsop from object {spec.name}. Do not edit.")
    w.line(f"# spec-sha256: {spec_digest(spec)}")
    w.line("# Message methods are reconstructed from the matching automaton.")
    w.line()
    w.line("import threading")
    if FifoQueue.kind in gp.queues.values():
        w.line("from collections import deque")
    w.line()
    w.line("from tsop.errors import ProtocolViolation")
    w.line()
    with w.block("_COUNTERS = {"):
        for index, counters in enumerate(gp.counters):
            shown = ", ".join(f"{t!r}: {c!r}" for t, c in counters.items())
            w.line(f"{index}: {{{shown}}},")
    w.line("}")
    w.line()
    w.line()

    with w.block(f"class {spec.name}:"):
        w.line()
        with w.block("def __init__(self):"):
            lock = gp.member("lock")
            w.line(f"self.{lock} = threading.Lock()")
            for op in spec.operations:
                w.line(f"self.{gp.member('try', op)} = threading.Condition(self.{lock})")
            w.line(f"self.{gp.member('state')} = 0")
            for tag, kind in gp.queues.items():
                field = f"self.{gp.member('queue', tag)}"
                if kind == CounterQueue.kind:
                    w.line(f"{field} = 0")
                elif kind == SlotQueue.kind:
                    w.line(f"{field} = None")
                elif kind == FifoQueue.kind:
                    w.line(f"{field} = deque()")
            for send in spec.constructor_sends:
                w.line(f"self.{gp.member('method', send.tag)}({', '.join(repr(v) for v in send.args)})")

        for m in gp.methods:
            w.line()
            if m.kind is MessageKind.STATE:
                _emit_state_method(w, gp, m)
            else:
                _emit_operation_method(w, spec, gp, m)

        for index in range(len(spec.reactions)):
            w.line()
            _emit_reaction(w, spec, gp, index)

    logger.debug("Generated %d lines for %s", len(w.lines), spec.name)
    return w.text()


def golden_diff(spec: ObjectSpec, a: MatchingAutomaton, expected: str) -> str:
    """Unified diff from `expected` to the freshly generated source ("" when equal)."""
    actual = generate_source(spec, a)
    return "".join(difflib.unified_diff(
        expected.splitlines(keepends=True),
        actual.splitlines(keepends=True),
        fromfile="golden", tofile="generated",
    ))


def golden_check(spec: ObjectSpec, a: MatchingAutomaton, expected: str) -> bool:
    """Byte equality of the generated source against a checked-in golden text."""
    if generate_source(spec, a) == expected:
        return True
    logger.warning("Generated source for %s differs from golden:\n%s",
                   spec.name, golden_diff(spec, a, expected))
    return False


def write_source(spec: ObjectSpec, a: MatchingAutomaton, out_dir: str) -> str:
    """
    Write <ObjectName>.py into an existing directory.

    Raises:
        FileNotFoundError if out_dir does not exist
    """
    if not os.path.isdir(out_dir):
        raise FileNotFoundError(f"output directory does not exist: {out_dir}")
    path = os.path.join(out_dir, f"{spec.name}.py")
    with open(path, "w", encoding="utf-8") as f:
        f.write(generate_source(spec, a))
    logger.info("Wrote %s", path)
    return path


def load_generated(source: str, name: str) -> type:
    """Compile emitted source and return the class called `name`."""
    namespace = {}
    exec(compile(source, f"<tsop generated {name}>", "exec"), namespace)
    return namespace[name]
