"""
Lark grammars for the `.tsop` object DSL and `.sim` simulation scripts.

Both languages are line-oriented: one declaration or event per line, `#`
starts a comment outside string literals. Literal values (init arguments,
script arguments, expected results) share one sub-grammar: None, booleans,
numbers, strings, lists, tuples and dicts, written as in Python.

The spec grammar has a second start symbol, `protocol`, used by
protocol.parse_protocol for standalone protocol expressions.
"""

import ast

from lark import Lark, Transformer, UnexpectedEOF, UnexpectedInput

_LITERALS = r"""
value: STRING                               -> string
     | SIGNED_NUMBER                        -> number
     | "None"                               -> none
     | "True"                               -> true
     | "False"                              -> false
     | NAME                                 -> bare_name
     | "[" (value ("," value)* ","?)? "]"   -> list_value
     | "(" ")"                              -> tuple_value
     | "(" value "," ")"                    -> tuple_value
     | "(" value ("," value)+ ","? ")"      -> tuple_value
     | "{" (pair ("," pair)* ","?)? "}"     -> dict_value

pair: value ":" value

NAME: /[A-Za-z_][A-Za-z0-9_]*/
STRING: /'(?:[^'\\\n]|\\.)*'|"(?:[^"\\\n]|\\.)*"/
COMMENT: /#[^\n]*/
_NL: /\r?\n/

%import common.SIGNED_NUMBER
%ignore /[ \t\f\r]+/
%ignore COMMENT
"""

SPEC_GRAMMAR = r"""
start: (_decl? _NL)* _decl?

_decl: object_decl
     | protocol_decl
     | state_decl
     | operation_decl
     | reaction_decl
     | init_decl

object_decl: OBJECT NAME
protocol_decl: PROTOCOL protocol
state_decl: STATE NAME "(" [names] ")" [returns]
operation_decl: OPERATION NAME "(" [names] ")" [returns]
reaction_decl: REACTION pattern "->" [actions]
init_decl: INIT NAME "(" (value ("," value)* ","?)? ")"

names: NAME ("," NAME)*
returns: "returns" RETURN_KIND
pattern: item ("&" item)*
item: NAME ("(" [names] ")")?
actions: action ("," action)*
action: NAME "(" [names] ")"                -> send_self
      | "return" NAME                       -> return_value

?protocol: shuffle_term
         | protocol "+" shuffle_term        -> sum
?shuffle_term: factor
             | shuffle_term _DOT factor     -> shuffle
?factor: "0"                                -> zero
       | "1"                                -> one
       | NAME                               -> atom
       | "*" NAME                           -> star
       | "*" "(" protocol ")"               -> star_group
       | "(" protocol ")"

OBJECT: "object"
PROTOCOL: "protocol"
STATE: "state"
OPERATION: "operation"
REACTION: "reaction"
INIT: "init"
RETURN_KIND: "value" | "void"
_DOT: "." | "·"
""" + _LITERALS

SCRIPT_GRAMMAR = r"""
start: (_event? _NL)* _event?

_event: init_event
      | send_event
      | call_event
      | returns_event
      | pending_event
      | violation_event
      | counters_event

init_event: INIT
send_event: SEND NAME "(" [args] ")"
call_event: CALL NAME "=" NAME "(" [args] ")"
returns_event: EXPECT NAME "returns" value
pending_event: EXPECT "pending" NAME
violation_event: EXPECT "violation"
counters_event: EXPECT "counters" "{" (entry ("," entry)* ","?)? "}"

args: value ("," value)* ","?
entry: NAME ":" COUNT

INIT: "init"
SEND: "send"
CALL: "call"
EXPECT: "expect"
COUNT: /\d+|\$/
""" + _LITERALS

spec_parser = Lark(SPEC_GRAMMAR, parser="lalr", start=["start", "protocol"], propagate_positions=True)
script_parser = Lark(SCRIPT_GRAMMAR, parser="lalr", propagate_positions=True)


class Literals(Transformer):
    """Turns `value` subtrees into the Python values they spell."""

    def not_literal(self, token) -> Exception:
        return ValueError(f"not a literal: {token}")

    def string(self, items):
        return ast.literal_eval(items[0])

    def number(self, items):
        text = str(items[0])
        try:
            return int(text)
        except ValueError:
            return float(text)

    def none(self, items):
        return None

    def true(self, items):
        return True

    def false(self, items):
        return False

    def bare_name(self, items):
        raise self.not_literal(items[0])

    def list_value(self, items):
        return list(items)

    def tuple_value(self, items):
        return tuple(items)

    def pair(self, items):
        return items[0], items[1]

    def dict_value(self, items):
        return dict(items)


def _at_end(exc: UnexpectedInput) -> bool:
    token = getattr(exc, "token", None)
    return isinstance(exc, UnexpectedEOF) or (token is not None and token.type == "$END")


def syntax_error(exc: UnexpectedInput, text: str, what: str) -> tuple:
    """
    Describe a Lark syntax error in a line-oriented source.

    Returns:
        (message, line), line being None when the source has no such line
    """
    line = getattr(exc, "line", -1)
    lines = text.splitlines()
    if line is None or line < 1 or line > len(lines):
        return "unexpected end of input", None
    source = lines[line - 1]
    first = len(source) - len(source.lstrip()) + 1
    if _at_end(exc):
        return f"unexpected end of input: {source.strip()}", line
    if exc.column == first:
        return f"unrecognized {what}: {source.strip()}", line
    return f"syntax error at column {exc.column}: {source.strip()}", line


def error_position(exc: UnexpectedInput, text: str) -> int:
    """Character offset of a syntax error, or the end of `text` at end of input."""
    pos = getattr(exc, "pos_in_stream", None)
    if _at_end(exc) or pos is None or pos < 0:
        return len(text)
    return pos
