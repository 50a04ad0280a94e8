"""
JSON export/import of a matching automaton.

Shape:
    {
        "object":    str,
        "tags":      [{"name", "kind", "bound": int | "unbounded"}],
        "states":    [{"index", "counters": {tag: int | "$"},
                       "annotation": [{tag: int | "omega"}], "firing": bool}],
        "receives":  [{"from", "tag", "to"}],
        "consumes":  [{"from", "reaction", "emptied": {tag: bool}, "to"}],
        "reactions": [{"index", "name", "pattern": [tag, ...]}]
    }

import_json(export_json(a)) == a.
"""

import json

from ..automaton import (
    ConsumeTransition,
    CounterState,
    MatchingAutomaton,
    ReactionInfo,
    ReceiveTransition,
)
from ..semantics import OMEGA, UNBOUNDED, Bound, GenVector, SemSet

_OMEGA_MARK = "omega"


def _vector_out(vector: GenVector, signature: tuple) -> dict:
    out = {}
    for tag in signature:
        c = vector.get(tag)
        out[tag] = _OMEGA_MARK if c is OMEGA else c
    return out


def _vector_in(raw: dict) -> GenVector:
    return GenVector.of({t: OMEGA if c == _OMEGA_MARK else int(c) for t, c in raw.items()})


def to_dict(automaton: MatchingAutomaton) -> dict:
    sig = automaton.signature
    return {
        "object": automaton.object_name,
        "tags": [
            {"name": t, "kind": k, "bound": "unbounded" if b.unbounded else b.limit}
            for t, k, b in zip(sig, automaton.kinds, automaton.bounds)
        ],
        "states": [
            {
                "index":      s.index,
                "counters":   dict(zip(sig, s.counters)),
                "annotation": [_vector_out(v, sig) for v in s.annotation.sorted_vectors()],
                "firing":     automaton.is_firing(s.index),
            }
            for s in automaton.states
        ],
        "receives": [
            {"from": r.source, "tag": r.tag, "to": r.target} for r in automaton.receives
        ],
        "consumes": [
            {"from": c.source, "reaction": c.reaction, "emptied": dict(c.emptied), "to": c.target}
            for c in automaton.consumes
        ],
        "reactions": [
            {"index": r.index, "name": r.name, "pattern": list(r.pattern)}
            for r in automaton.reactions
        ],
    }


def from_dict(data: dict) -> MatchingAutomaton:
    sig = tuple(t["name"] for t in data["tags"])
    return MatchingAutomaton(
        object_name=data["object"],
        signature=sig,
        kinds=tuple(t["kind"] for t in data["tags"]),
        bounds=tuple(
            UNBOUNDED if t["bound"] == "unbounded" else Bound(int(t["bound"])) for t in data["tags"]
        ),
        states=tuple(
            CounterState(
                s["index"],
                tuple(s["counters"][t] for t in sig),
                SemSet.of(_vector_in(v) for v in s["annotation"]),
            )
            for s in data["states"]
        ),
        receives=tuple(ReceiveTransition(r["from"], r["tag"], r["to"]) for r in data["receives"]),
        consumes=tuple(
            ConsumeTransition(c["from"], c["reaction"], tuple(c["emptied"].items()), c["to"])
            for c in data["consumes"]
        ),
        reactions=tuple(
            ReactionInfo(r["index"], r["name"], tuple(r["pattern"])) for r in data.get("reactions", [])
        ),
    )


def export_json(automaton: MatchingAutomaton) -> str:
    return json.dumps(to_dict(automaton), indent=2, ensure_ascii=False) + "\n"


def import_json(text: str) -> MatchingAutomaton:
    return from_dict(json.loads(text))
