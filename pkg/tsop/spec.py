"""
Object specifications: the `.tsop` DSL.

A spec file is line-oriented UTF-8 text parsed with grammar.SPEC_GRAMMAR; `#`
starts a comment outside string literals. Example:

    object Future
    protocol *get . (EMPTY . put + FULL)
    state EMPTY()
    state FULL(x)
    operation put(x)
    operation get() returns value
    reaction EMPTY & put(x) -> FULL(x)
    reaction FULL(x) & get() -> FULL(x), return x
    init EMPTY()

Declarations may appear in any order; protocol tags are checked once every
tag is known. Reaction order is significant: earlier reactions win when several can
fire in the same state.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from lark import UnexpectedInput, v_args
from lark.exceptions import VisitError

from .automaton import build_automaton, fireable_reactions
from .errors import EmptyProtocolError, IllFormedProtocolError, SpecError
from .grammar import Literals, spec_parser, syntax_error
from .protocol import ProtocolBuilder, ProtocolType, format_protocol, is_tag, tags, well_formed
from .semantics import is_empty

logger = logging.getLogger(__name__)


class MessageKind(Enum):
    STATE     = "state"
    OPERATION = "operation"


@dataclass(frozen=True)
class MessageDecl:
    tag: str
    kind: MessageKind
    params: tuple = ()
    returns: bool = False    # operations only: True when a value is returned

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class PatternItem:
    tag: str
    bindings: tuple = ()


@dataclass(frozen=True)
class SendSelf:
    tag: str
    args: tuple = ()     # binding names


@dataclass(frozen=True)
class Reaction:
    pattern: tuple           # of PatternItem, in written order
    body: tuple = ()         # of SendSelf
    returns: Optional[str] = None

    @property
    def tags(self) -> tuple:
        return tuple(item.tag for item in self.pattern)

    @property
    def name(self) -> str:
        return "when_" + "_".join(self.tags)

    @property
    def bindings(self) -> tuple:
        return tuple(b for item in self.pattern for b in item.bindings)


@dataclass(frozen=True)
class InitSend:
    tag: str
    args: tuple = ()     # literal values


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    messages: tuple
    protocol: ProtocolType
    reactions: tuple = ()
    constructor_sends: tuple = ()
    source: Optional[str] = field(default=None, compare=False, repr=False)

    @property
    def signature(self) -> tuple:
        return tuple(sorted(m.tag for m in self.messages))

    def message(self, tag: str) -> MessageDecl:
        for m in self.messages:
            if m.tag == tag:
                return m
        raise KeyError(tag)

    @property
    def operations(self) -> tuple:
        return tuple(m.tag for m in self.messages if m.kind is MessageKind.OPERATION)

    @property
    def states(self) -> tuple:
        return tuple(m.tag for m in self.messages if m.kind is MessageKind.STATE)

    @property
    def reaction_names(self) -> tuple:
        """Reaction names, unique per object: a repeated name gets its index appended."""
        names = []
        for i, reaction in enumerate(self.reactions):
            name = reaction.name
            if name in names:
                name = f"{name}_{i}"
            while name in names:
                name += "_"
            names.append(name)
        return tuple(names)

    def operation_of(self, reaction: Reaction) -> str:
        """The single operation tag of a validated reaction's pattern."""
        return next(t for t in reaction.tags if self.message(t).kind is MessageKind.OPERATION)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class _SpecBuilder(ProtocolBuilder, Literals):
    """
    Turns a spec parse tree into (kind, line, payload) declaration records.

    Protocol tags are not checked here; the signature is only complete once
    every declaration has been read.
    """

    def not_literal(self, token) -> Exception:
        return SpecError(f"init arguments must be literals: {token}", token.line)

    @v_args(meta=True)
    def star_group(self, meta, items):
        raise SpecError("protocol: '*' applies to a single tag only", meta.line)

    def start(self, items):
        return items

    def names(self, items):
        return tuple(str(t) for t in items)

    def returns(self, items):
        return str(items[0])

    def object_decl(self, items):
        keyword, name = items
        return "object", keyword.line, str(name)

    def protocol_decl(self, items):
        keyword, protocol = items
        return "protocol", keyword.line, protocol

    def state_decl(self, items):
        keyword, tag, params, returns = items
        if returns is not None:
            raise SpecError(f"state message '{tag}' cannot declare a return", keyword.line)
        return "message", keyword.line, MessageDecl(str(tag), MessageKind.STATE, params or ())

    def operation_decl(self, items):
        keyword, tag, params, returns = items
        return "message", keyword.line, MessageDecl(
            str(tag), MessageKind.OPERATION, params or (), returns=(returns == "value"),
        )

    def item(self, items):
        bindings = items[1] if len(items) > 1 else None
        return PatternItem(str(items[0]), bindings or ())

    def pattern(self, items):
        return tuple(items)

    def send_self(self, items):
        return SendSelf(str(items[0]), items[1] or ())

    def return_value(self, items):
        return str(items[0])

    def actions(self, items):
        return list(items)

    def reaction_decl(self, items):
        keyword, pattern, actions = items
        body, returns = [], None
        for action in actions or ():
            if returns is not None:
                raise SpecError("'return' must be the last action", keyword.line)
            if isinstance(action, SendSelf):
                body.append(action)
            else:
                returns = action
        return "reaction", keyword.line, Reaction(pattern, tuple(body), returns)

    def init_decl(self, items):
        keyword, tag, *args = items
        return "init", keyword.line, InitSend(str(tag), tuple(args))


def parse_spec(text: str) -> ObjectSpec:
    """
    Parse and fully validate a `.tsop` specification.

    Raises:
        SpecError for every syntactic or semantic defect (with line number)
    """
    try:
        tree = spec_parser.parse(text, start="start")
    except UnexpectedInput as exc:
        raise SpecError(*syntax_error(exc, text, "declaration")) from None
    try:
        decls = _SpecBuilder().transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None

    name, protocol = None, None
    messages, reactions, inits = [], [], []
    lines = {}
    for kind, number, payload in decls:
        if kind == "object":
            if name is not None:
                raise SpecError("only one object per file", number)
            name = payload
        elif kind == "protocol":
            if protocol is not None:
                raise SpecError("duplicate protocol declaration", number)
            protocol = payload
            lines[("protocol",)] = number
        elif kind == "message":
            lines[("message", payload.tag)] = number
            messages.append(payload)
        elif kind == "reaction":
            lines[("reaction", len(reactions))] = number
            reactions.append(payload)
        else:
            lines[("init", len(inits))] = number
            inits.append(payload)

    if name is None:
        raise SpecError("missing 'object <Name>' declaration")
    if protocol is None:
        raise SpecError("missing 'protocol' declaration")

    spec = ObjectSpec(name, tuple(messages), protocol, tuple(reactions), tuple(inits), source=text)
    validate_spec(spec, lines)
    logger.debug("Parsed spec %s: %d messages, %d reactions", name, len(messages), len(reactions))
    return spec


def load_spec(path: str) -> ObjectSpec:
    with open(path, encoding="utf-8") as f:
        return parse_spec(f.read())


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_messages(messages: list, lines: dict) -> None:
    seen = set()
    for msg in messages:
        line = lines.get(("message", msg.tag))
        if msg.tag in seen:
            raise SpecError(f"tag '{msg.tag}' declared twice", line)
        seen.add(msg.tag)
        if len(set(msg.params)) != len(msg.params):
            raise SpecError(f"duplicate parameter name in '{msg.tag}'", line)
        if msg.kind is MessageKind.STATE and msg.returns:
            raise SpecError(f"state message '{msg.tag}' cannot declare a return", line)


def _check_protocol(spec: ObjectSpec, line: Optional[int]) -> None:
    unknown = tags(spec.protocol) - set(spec.signature)
    if unknown:
        raise SpecError("protocol: " + ", ".join(f"unknown tag '{t}'" for t in sorted(unknown)), line)
    if not well_formed(spec.protocol):
        raise IllFormedProtocolError(
            f"protocol is not well-formed: starred tag(s) also occur unstarred "
            f"({format_protocol(spec.protocol)})"
        )
    if is_empty(spec.protocol):
        raise EmptyProtocolError(f"empty protocol: {format_protocol(spec.protocol)} admits no trace")


def _check_reaction(spec: ObjectSpec, reaction: Reaction, line: Optional[int]) -> None:
    declared = {m.tag: m for m in spec.messages}

    seen_tags, bound = set(), set()
    for item in reaction.pattern:
        msg = declared.get(item.tag)
        if msg is None:
            raise SpecError(f"unknown tag '{item.tag}' in join pattern", line)
        if item.tag in seen_tags:
            raise SpecError(f"tag '{item.tag}' appears twice in one join pattern", line)
        seen_tags.add(item.tag)
        if len(item.bindings) != msg.arity:
            raise SpecError(
                f"'{item.tag}' takes {msg.arity} argument(s) but the pattern binds {len(item.bindings)}",
                line,
            )
        for b in item.bindings:
            if b in bound:
                raise SpecError(f"binding '{b}' bound twice in one join pattern", line)
            bound.add(b)

    ops = [t for t in reaction.tags if declared[t].kind is MessageKind.OPERATION]
    if len(ops) != 1:
        raise SpecError(
            f"join pattern must contain exactly one operation, found {len(ops)}"
            + (f" ({', '.join(ops)})" if ops else ""),
            line,
        )

    for send in reaction.body:
        msg = declared.get(send.tag)
        if msg is None:
            raise SpecError(f"unknown tag '{send.tag}' in reaction body", line)
        if len(send.args) != msg.arity:
            raise SpecError(
                f"'{send.tag}' takes {msg.arity} argument(s) but is sent {len(send.args)}", line
            )
        for arg in send.args:
            if arg not in bound:
                raise SpecError(f"unbound variable '{arg}' in reaction body", line)

    returns_value = declared[ops[0]].returns
    if reaction.returns is not None:
        if not returns_value:
            raise SpecError(f"operation '{ops[0]}' returns nothing but the reaction returns a value", line)
        if reaction.returns not in bound:
            raise SpecError(f"unbound variable '{reaction.returns}' in return", line)
    elif returns_value:
        raise SpecError(f"operation '{ops[0]}' returns a value but the reaction has no 'return'", line)


def _check_init(spec: ObjectSpec, send: InitSend, line: Optional[int]) -> None:
    declared = {m.tag: m for m in spec.messages}
    msg = declared.get(send.tag)
    if msg is None:
        raise SpecError(f"unknown tag '{send.tag}' in init", line)
    if msg.kind is not MessageKind.STATE:
        raise SpecError(f"init may only send state messages, '{send.tag}' is an operation", line)
    if len(send.args) != msg.arity:
        raise SpecError(f"'{send.tag}' takes {msg.arity} argument(s) but init passes {len(send.args)}", line)


def validate_spec(spec: ObjectSpec, lines: Optional[dict] = None) -> None:
    """Check every MessageDecl/Reaction/ObjectSpec invariant; raise on the first defect."""
    lines = lines or {}
    if not is_tag(spec.name):
        raise SpecError(f"invalid object name '{spec.name}'")
    _check_messages(list(spec.messages), lines)
    _check_protocol(spec, lines.get(("protocol",)))
    for i, reaction in enumerate(spec.reactions):
        _check_reaction(spec, reaction, lines.get(("reaction", i)))
    for i, send in enumerate(spec.constructor_sends):
        _check_init(spec, send, lines.get(("init", i)))


def validate_against_protocol(spec: ObjectSpec, automaton=None) -> list:
    """
    Warnings about behavior the protocol makes impossible or pointless.

    Args:
        spec:      A validated spec
        automaton: Its matching automaton (built here when omitted)

    Returns:
        List of human-readable warning strings (empty when all is well)
    """
    automaton = automaton or build_automaton(spec)
    warnings  = []

    if not spec.reactions:
        warnings.append(f"{spec.name} has no reactions: the object can never answer operations")

    live  = fireable_reactions(automaton)
    names = spec.reaction_names
    for i, reaction in enumerate(spec.reactions):
        earlier = next((j for j in range(i) if set(spec.reactions[j].tags) == set(reaction.tags)), None)
        if earlier is not None:
            warnings.append(
                f"reaction #{i} {names[i]} is shadowed by reaction #{earlier} {names[earlier]}: "
                "both join the same tags and the earlier one always wins"
            )
        elif i not in live:
            warnings.append(
                f"reaction #{i} {names[i]} can never fire: "
                "no legal state holds its whole join pattern"
            )

    answered = {spec.operation_of(r) for r in spec.reactions}
    for op in spec.operations:
        if spec.reactions and op not in answered:
            warnings.append(f"operation '{op}' appears in no reaction: its invocations never return")

    mentioned = tags(spec.protocol)
    for tag in spec.signature:
        if tag not in mentioned:
            warnings.append(f"tag '{tag}' does not occur in the protocol: every send of it is a violation")

    for w in warnings:
        logger.warning("%s", w)
    return warnings


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

def _pattern_item(spec: ObjectSpec, item: PatternItem) -> str:
    if not item.bindings and spec.message(item.tag).kind is MessageKind.STATE:
        return item.tag
    return f"{item.tag}({', '.join(item.bindings)})"


def pretty_print(spec: ObjectSpec) -> str:
    """Render a spec back to DSL text; parse_spec(pretty_print(s)) == s."""
    out = [f"object {spec.name}", f"protocol {format_protocol(spec.protocol)}"]
    for msg in spec.messages:
        decl = f"{msg.kind.value} {msg.tag}({', '.join(msg.params)})"
        if msg.returns:
            decl += " returns value"
        out.append(decl)
    for reaction in spec.reactions:
        pattern = " & ".join(_pattern_item(spec, item) for item in reaction.pattern)
        actions = [f"{s.tag}({', '.join(s.args)})" for s in reaction.body]
        if reaction.returns is not None:
            actions.append(f"return {reaction.returns}")
        out.append(f"reaction {pattern} -> {', '.join(actions)}".rstrip())
    for send in spec.constructor_sends:
        out.append(f"init {send.tag}({', '.join(repr(a) for a in send.args)})")
    return "\n".join(out) + "\n"
