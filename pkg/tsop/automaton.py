"""
Matching automaton construction.

States are counter tuples over the signature (tags in sorted order): an exact
count 0..N for an N-bounded tag, 0 or AT_LEAST_ONE for an unbounded tag. Each
state carries the semantic annotation of the protocol after removing the
messages its counters describe; states whose annotation would be empty are
never created, so a protocol violation shows up as a missing receive edge.

Discovery is breadth-first from the all-zero state with tags explored in
signature order, which fixes state indices deterministically.
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import AutomatonError, EmptyProtocolError, IllFormedProtocolError
from .protocol import format_protocol, well_formed
from .semantics import OMEGA, Bound, SemSet, bound, sem_derivative, semantics

logger = logging.getLogger(__name__)

AT_LEAST_ONE = "$"


@dataclass(frozen=True)
class CounterState:
    index: int
    counters: tuple          # aligned with the signature; int or AT_LEAST_ONE
    annotation: SemSet


@dataclass(frozen=True)
class ReceiveTransition:
    source: int
    tag: str
    target: int


@dataclass(frozen=True)
class ConsumeTransition:
    source: int
    reaction: int
    emptied: tuple           # ((unbounded pattern tag, emptied?), ...) in signature order
    target: int


@dataclass(frozen=True)
class ReactionInfo:
    index: int
    name: str
    pattern: tuple           # tags in written order


@dataclass(frozen=True)
class MatchingAutomaton:
    object_name: str
    signature: tuple
    kinds: tuple             # "state" / "operation", aligned with signature
    bounds: tuple            # Bound, aligned with signature
    states: tuple
    receives: tuple
    consumes: tuple
    reactions: tuple = ()
    initial: int = 0

    _receive_map: dict = field(default=None, init=False, compare=False, repr=False)
    _consume_map: dict = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        receive_map = {}
        for r in self.receives:
            if (r.source, r.tag) in receive_map:
                raise AutomatonError(f"two receive transitions from state {r.source} on '{r.tag}'")
            receive_map[(r.source, r.tag)] = r.target
        consume_map = {}
        for c in self.consumes:
            consume_map.setdefault(c.source, []).append(c)
        object.__setattr__(self, "_receive_map", receive_map)
        object.__setattr__(self, "_consume_map", {k: tuple(v) for k, v in consume_map.items()})

    def position(self, tag: str) -> int:
        return self.signature.index(tag)

    def bound_of(self, tag: str) -> Bound:
        return self.bounds[self.position(tag)]

    def receive(self, state: int, tag: str) -> Optional[int]:
        """Target of the receive edge, or None when receiving `tag` violates the protocol."""
        return self._receive_map.get((state, tag))

    def consumes_from(self, state: int) -> tuple:
        return self._consume_map.get(state, ())

    def is_firing(self, state: int) -> bool:
        return state in self._consume_map

    def consume_target(self, state: int, reaction: int, emptied: dict) -> int:
        """Pick the consume edge whose emptied flags match the observed queues."""
        for c in self.consumes_from(state):
            if c.reaction == reaction and all(emptied[t] == flag for t, flag in c.emptied):
                return c.target
        raise AutomatonError(f"no consume transition from state {state} for reaction #{reaction}")

    def counters_of(self, state: int) -> dict:
        return dict(zip(self.signature, self.states[state].counters))

    def describe(self, state: int) -> str:
        counters = self.states[state].counters
        return "".join(str(c) for c in counters)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _increment(counters: tuple, pos: int, limit: Bound) -> tuple:
    current = counters[pos]
    if limit.unbounded:
        raised = AT_LEAST_ONE
    else:
        raised = current + 1
        if raised > limit.limit:
            raise AutomatonError(
                f"counter {pos} exceeds its bound {limit.limit} with a non-empty annotation"
            )
    return counters[:pos] + (raised,) + counters[pos + 1:]


def _matches(counters: tuple, positions: list, bounds: tuple) -> bool:
    for pos in positions:
        c = counters[pos]
        if bounds[pos].unbounded:
            if c != AT_LEAST_ONE:
                return False
        elif c < 1:
            return False
    return True


def build_automaton(spec) -> MatchingAutomaton:
    """
    Build the pruned matching automaton of a validated ObjectSpec.

    Raises:
        IllFormedProtocolError / EmptyProtocolError on an unusable protocol
        AutomatonError if the construction contradicts its own invariants
    """
    protocol  = spec.protocol
    signature = spec.signature
    if not well_formed(protocol):
        raise IllFormedProtocolError(f"protocol is not well-formed: {format_protocol(protocol)}")
    initial_annotation = semantics(protocol)
    if initial_annotation.is_empty():
        raise EmptyProtocolError(f"empty protocol: {format_protocol(protocol)} admits no trace")

    bounds = tuple(bound(protocol, t) for t in signature)
    kinds  = tuple(spec.message(t).kind.value for t in signature)

    zero     = tuple(0 for _ in signature)
    states   = [CounterState(0, zero, initial_annotation)]
    index_of = {zero: 0}
    receives = []
    pending  = deque([0])

    while pending:
        state = states[pending.popleft()]
        for pos, tag in enumerate(signature):
            annotation = sem_derivative(state.annotation, tag)
            if annotation.is_empty():
                continue
            counters = _increment(state.counters, pos, bounds[pos])
            target = index_of.get(counters)
            if target is None:
                target = len(states)
                states.append(CounterState(target, counters, annotation))
                index_of[counters] = target
                pending.append(target)
                logger.debug("state %d %s discovered via %s", target, counters, tag)
            elif states[target].annotation != annotation:
                raise AutomatonError(
                    f"state {counters} reached with two different annotations: "
                    f"{states[target].annotation} vs {annotation}"
                )
            receives.append(ReceiveTransition(state.index, tag, target))

    reactions = tuple(
        ReactionInfo(i, name, r.tags) for i, (r, name) in enumerate(zip(spec.reactions, spec.reaction_names))
    )
    consumes = []
    for state in states:
        for info in reactions:
            positions = sorted(signature.index(t) for t in info.pattern)
            if not _matches(state.counters, positions, bounds):
                continue
            unbounded = [p for p in positions if bounds[p].unbounded]
            for flags in itertools.product((True, False), repeat=len(unbounded)):
                counters = list(state.counters)
                for p in positions:
                    if not bounds[p].unbounded:
                        counters[p] -= 1
                for p, flag in zip(unbounded, flags):
                    counters[p] = 0 if flag else AT_LEAST_ONE
                target = index_of.get(tuple(counters))
                if target is None:
                    raise AutomatonError(
                        f"consume target {tuple(counters)} of reaction {info.name} is not a legal state"
                    )
                emptied = tuple((signature[p], flag) for p, flag in zip(unbounded, flags))
                consumes.append(ConsumeTransition(state.index, info.index, emptied, target))

    automaton = MatchingAutomaton(
        object_name=spec.name,
        signature=signature,
        kinds=kinds,
        bounds=bounds,
        states=tuple(states),
        receives=tuple(receives),
        consumes=tuple(consumes),
        reactions=reactions,
    )
    logger.info(
        "Built automaton for %s: %d legal states, %d receive and %d consume transitions",
        spec.name, len(states), len(receives), len(consumes),
    )
    return automaton


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def fireable(automaton: MatchingAutomaton, state: int) -> list:
    """Reactions with at least one consume edge from `state`, in declaration order."""
    return sorted({c.reaction for c in automaton.consumes_from(state)})


def fireable_reactions(automaton: MatchingAutomaton) -> set:
    """Reactions that fire in at least one legal state."""
    return {c.reaction for c in automaton.consumes}


def firing_states(automaton: MatchingAutomaton) -> list:
    return [s.index for s in automaton.states if automaton.is_firing(s.index)]


def raw_state_count(automaton: MatchingAutomaton) -> int:
    """Size of the unpruned counter space."""
    total = 1
    for b in automaton.bounds:
        total *= 2 if b.unbounded else b.limit + 1
    return total


def legal_states_oracle(spec) -> set:
    """
    Independent legality check: enumerate the whole counter space and keep the
    tuples compatible with some vector of the protocol's semantics.
    """
    sem = semantics(spec.protocol)
    if sem.is_empty():
        return set()
    signature = spec.signature
    bounds = [bound(spec.protocol, t) for t in signature]
    ranges = [(0, AT_LEAST_ONE) if b.unbounded else range(b.limit + 1) for b in bounds]

    def compatible(counters: tuple, v) -> bool:
        for tag, c in zip(signature, counters):
            have = v.get(tag)
            if c == AT_LEAST_ONE:
                if have is not OMEGA:
                    return False
            elif have is not OMEGA and c > have:
                return False
        return True

    return {
        counters for counters in itertools.product(*ranges)
        if any(compatible(counters, v) for v in sem.vectors)
    }
