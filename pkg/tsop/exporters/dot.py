"""
Graphviz DOT rendering of a matching automaton.

Receive edges are solid and labeled with the received tag; consume edges are
dashed and labeled with the consumed multiset as a counter tuple. Firing
states are double circles. Node labels show the counter tuple and the index.
"""

from ..automaton import MatchingAutomaton


def _quote(text: str) -> str:
    # labels may carry the \n escape; tags and names never contain quotes
    return '"{}"'.format(text.replace('"', r"\""))


def _consumed(automaton: MatchingAutomaton, reaction: int) -> str:
    pattern = set(automaton.reactions[reaction].pattern)
    return "".join("1" if t in pattern else "0" for t in automaton.signature)


def _lines(automaton: MatchingAutomaton):
    yield f"digraph {_quote(automaton.object_name)} {{\n"
    yield "  rankdir=LR;\n"
    yield "  node [shape=circle];\n"
    for state in automaton.states:
        label = f"{automaton.describe(state.index) or '()'}\\n({state.index})"
        shape = ' shape=doublecircle' if automaton.is_firing(state.index) else ""
        yield f"  s{state.index} [label={_quote(label)}{shape}];\n"
    for r in automaton.receives:
        yield f"  s{r.source} -> s{r.target} [label={_quote(r.tag)}];\n"
    for c in automaton.consumes:
        label = _consumed(automaton, c.reaction)
        yield f"  s{c.source} -> s{c.target} [style=dashed label={_quote(label)}];\n"
    yield "}\n"


def export_dot(automaton: MatchingAutomaton) -> str:
    return "".join(_lines(automaton))
