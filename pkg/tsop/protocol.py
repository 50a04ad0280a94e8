"""
Protocol types: abstract syntax, parser, formatter, well-formedness and the
syntactic derivative.

Grammar (the `protocol` rule of grammar.SPEC_GRAMMAR; `·` and `.` are
interchangeable, whitespace is insignificant):

    E ::= T ('+' T)*
    T ::= F (('·' | '.') F)*
    F ::= '0' | '1' | ident | '*' ident | '(' E ')'

`·` binds tighter than `+`; both are left-associative. `*` applies to a single
tag only.
"""

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from lark import Transformer, UnexpectedInput, v_args
from lark.exceptions import VisitError

from .errors import ProtocolSyntaxError, UnknownTagError
from .grammar import error_position, spec_parser

logger = logging.getLogger(__name__)

_TAG_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def is_tag(name: str) -> bool:
    return bool(_TAG_RE.match(name))


# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------

class ProtocolType:
    """Base of the six protocol constructors. All instances are immutable."""

    def __str__(self) -> str:
        return format_protocol(self, ascii=False)


@dataclass(frozen=True)
class Zero(ProtocolType):
    pass


@dataclass(frozen=True)
class One(ProtocolType):
    pass


@dataclass(frozen=True)
class Atom(ProtocolType):
    tag: str


@dataclass(frozen=True)
class Star(ProtocolType):
    tag: str


@dataclass(frozen=True)
class Sum(ProtocolType):
    left: ProtocolType
    right: ProtocolType


@dataclass(frozen=True)
class Shuffle(ProtocolType):
    left: ProtocolType
    right: ProtocolType


ZERO = Zero()
ONE  = One()


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class ProtocolBuilder(Transformer):
    """
    Builds ProtocolType values from `protocol` subtrees of the spec grammar.

    With `known` set, every tag is checked against it and an unknown one raises
    UnknownTagError at its character offset.
    """

    def __init__(self, known: Optional[set] = None):
        super().__init__()
        self.known = known

    def _tag(self, token) -> str:
        if self.known is not None and str(token) not in self.known:
            raise UnknownTagError(str(token), token.start_pos)
        return str(token)

    def zero(self, items):
        return ZERO

    def one(self, items):
        return ONE

    def atom(self, items):
        return Atom(self._tag(items[0]))

    def star(self, items):
        return Star(self._tag(items[0]))

    @v_args(meta=True)
    def star_group(self, meta, items):
        raise ProtocolSyntaxError("'*' applies to a single tag only", meta.start_pos)

    def sum(self, items):
        return Sum(items[0], items[1])

    def shuffle(self, items):
        return Shuffle(items[0], items[1])


def parse_protocol(text: str, signature: Iterable[str]) -> ProtocolType:
    """
    Parse a protocol expression over the given tag signature.

    Raises:
        ProtocolSyntaxError on malformed input (with character position)
        UnknownTagError     when an identifier is not in the signature
    """
    if not text or not text.strip():
        raise ProtocolSyntaxError("empty protocol expression", 0)
    try:
        tree = spec_parser.parse(text, start="protocol")
    except UnexpectedInput as exc:
        pos = error_position(exc, text)
        found = f"'{text[pos]}'" if pos < len(text) else "end of input"
        raise ProtocolSyntaxError(f"unexpected {found}", pos) from None
    try:
        return ProtocolBuilder(set(signature)).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None


# ---------------------------------------------------------------------------
# Formatter
# ---------------------------------------------------------------------------

_PRECEDENCE = {Sum: 0, Shuffle: 1}


def format_protocol(e: ProtocolType, ascii: bool = True) -> str:
    """Render a protocol with minimal parentheses; parse(format(e)) == e."""
    dot = "." if ascii else "·"

    def render(node: ProtocolType, outer: int, right: bool) -> str:
        if isinstance(node, Zero):
            return "0"
        if isinstance(node, One):
            return "1"
        if isinstance(node, Atom):
            return node.tag
        if isinstance(node, Star):
            return f"*{node.tag}"
        own = _PRECEDENCE[type(node)]
        op  = "+" if isinstance(node, Sum) else dot
        text = f"{render(node.left, own, False)} {op} {render(node.right, own, True)}"
        if own < outer or (right and own == outer):
            return f"({text})"
        return text

    return render(e, -1, False)


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------

def starred_tags(e: ProtocolType) -> frozenset:
    if isinstance(e, Star):
        return frozenset((e.tag,))
    if isinstance(e, (Sum, Shuffle)):
        return starred_tags(e.left) | starred_tags(e.right)
    return frozenset()


def unstarred_tags(e: ProtocolType) -> frozenset:
    if isinstance(e, Atom):
        return frozenset((e.tag,))
    if isinstance(e, (Sum, Shuffle)):
        return unstarred_tags(e.left) | unstarred_tags(e.right)
    return frozenset()


def tags(e: ProtocolType) -> frozenset:
    return starred_tags(e) | unstarred_tags(e)


def well_formed(e: ProtocolType) -> bool:
    """True iff no tag occurs both starred and unstarred."""
    return not (starred_tags(e) & unstarred_tags(e))


def derivative(e: ProtocolType, tag: str) -> ProtocolType:
    """
    Syntactic derivative e[tag]: the protocol left after removing one occurrence
    of `tag`. Follows the six defining clauses literally, without simplification.
    """
    if isinstance(e, (Zero, One)):
        return ZERO
    if isinstance(e, Atom):
        return ONE if e.tag == tag else ZERO
    if isinstance(e, Star):
        return e if e.tag == tag else ZERO
    if isinstance(e, Sum):
        return Sum(derivative(e.left, tag), derivative(e.right, tag))
    if isinstance(e, Shuffle):
        return Sum(
            Shuffle(derivative(e.left, tag), e.right),
            Shuffle(e.left, derivative(e.right, tag)),
        )
    raise TypeError(f"not a protocol type: {e!r}")
