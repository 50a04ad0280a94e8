"""
Trace semantics of protocol types, up to permutation.

A protocol denotes a set of tag strings; since only the presence of messages
matters to the matching automaton, strings are abstracted into multisets. A
multiset language of a well-formed protocol is a finite union of "boxes":
generalized count vectors whose components are either an exact count or OMEGA
(any count). SemSet keeps such a union as an antichain under subsumption,
which makes plain set equality decide language equality.

trace_oracle() is the independent brute-force reference: it enumerates actual
strings from the defining equations and only projects at the end.
"""

import functools
import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .errors import EmptyProtocolError
from .protocol import (
    Atom,
    One,
    ProtocolType,
    Shuffle,
    Star,
    Sum,
    Zero,
    starred_tags,
)

logger = logging.getLogger(__name__)


class _Omega:
    """Count component meaning "any number of occurrences"."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ω"

    def __reduce__(self):
        return (_Omega, ())


OMEGA = _Omega()

GenCount = Union[int, _Omega]

# A concrete multiset: sorted (tag, count) pairs with count > 0.
Multiset = tuple


def add_counts(a: GenCount, b: GenCount) -> GenCount:
    if a is OMEGA or b is OMEGA:
        return OMEGA
    return a + b


def decrement_count(c: GenCount) -> Optional[GenCount]:
    """c - 1, or None when c is the finite count 0."""
    if c is OMEGA:
        return OMEGA
    return c - 1 if c >= 1 else None


def multiset(items: Iterable[str]) -> Multiset:
    return tuple(sorted(Counter(items).items()))


# ---------------------------------------------------------------------------
# Generalized vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenVector:
    """Total map tag -> GenCount; zero components are not stored."""

    counts: tuple = ()

    @classmethod
    def of(cls, mapping: Mapping[str, GenCount]) -> "GenVector":
        return cls(tuple(sorted((t, c) for t, c in mapping.items() if c is OMEGA or c > 0)))

    @classmethod
    def unit(cls, tag: str) -> "GenVector":
        return cls(((tag, 1),))

    @classmethod
    def omega(cls, tag: str) -> "GenVector":
        return cls(((tag, OMEGA),))

    def as_dict(self) -> dict:
        return dict(self.counts)

    def get(self, tag: str) -> GenCount:
        for t, c in self.counts:
            if t == tag:
                return c
        return 0

    def add(self, other: "GenVector") -> "GenVector":
        merged = self.as_dict()
        for t, c in other.counts:
            merged[t] = add_counts(merged.get(t, 0), c)
        return GenVector.of(merged)

    def decrement(self, tag: str) -> Optional["GenVector"]:
        lowered = decrement_count(self.get(tag))
        if lowered is None:
            return None
        merged = self.as_dict()
        merged[tag] = lowered
        return GenVector.of(merged)

    def subsumed_by(self, other: "GenVector") -> bool:
        """Every concrete multiset of self is also one of other."""
        for t in {t for t, _ in self.counts} | {t for t, _ in other.counts}:
            theirs = other.get(t)
            if theirs is not OMEGA and self.get(t) != theirs:
                return False
        return True

    def concrete(self, max_len: int) -> Iterable[Multiset]:
        """Concrete multisets denoted by this vector with at most max_len elements."""
        finite = {t: c for t, c in self.counts if c is not OMEGA}
        room   = max_len - sum(finite.values())
        if room < 0:
            return
        free = [t for t, c in self.counts if c is OMEGA]
        for extra in itertools.product(range(room + 1), repeat=len(free)):
            if sum(extra) > room:
                continue
            full = dict(finite)
            full.update((t, n) for t, n in zip(free, extra))
            yield tuple(sorted((t, n) for t, n in full.items() if n > 0))

    def __str__(self) -> str:
        return "(" + ", ".join(f"{t}:{c!r}" if c is OMEGA else f"{t}:{c}" for t, c in self.counts) + ")"


# ---------------------------------------------------------------------------
# Canonical semantic sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SemSet:
    vectors: frozenset = frozenset()

    @classmethod
    def of(cls, vectors: Iterable[GenVector]) -> "SemSet":
        """Build the canonical antichain: drop every vector subsumed by another."""
        pool = set(vectors)
        kept = [
            v for v in pool
            if not any(w != v and v.subsumed_by(w) for w in pool)
        ]
        return cls(frozenset(kept))

    def is_empty(self) -> bool:
        return not self.vectors

    def union(self, other: "SemSet") -> "SemSet":
        return SemSet.of(self.vectors | other.vectors)

    def shuffle(self, other: "SemSet") -> "SemSet":
        return SemSet.of(v.add(w) for v in self.vectors for w in other.vectors)

    def expand(self, max_len: int) -> set:
        """All concrete multisets of the language with at most max_len elements."""
        out = set()
        for v in self.vectors:
            out.update(v.concrete(max_len))
        return out

    def sorted_vectors(self) -> list:
        return sorted(self.vectors, key=lambda v: [(t, -1 if c is OMEGA else c) for t, c in v.counts])

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self) -> int:
        return len(self.vectors)

    def __str__(self) -> str:
        return "{" + ", ".join(str(v) for v in self.sorted_vectors()) + "}"


EMPTY_SET = SemSet()


@functools.lru_cache(maxsize=None)
def semantics(e: ProtocolType) -> SemSet:
    """Canonical multiset semantics of a well-formed protocol."""
    if isinstance(e, Zero):
        return EMPTY_SET
    if isinstance(e, One):
        return SemSet(frozenset((GenVector(),)))
    if isinstance(e, Atom):
        return SemSet(frozenset((GenVector.unit(e.tag),)))
    if isinstance(e, Star):
        return SemSet(frozenset((GenVector.omega(e.tag),)))
    if isinstance(e, Sum):
        return semantics(e.left).union(semantics(e.right))
    if isinstance(e, Shuffle):
        return semantics(e.left).shuffle(semantics(e.right))
    raise TypeError(f"not a protocol type: {e!r}")


def sem_derivative(s: SemSet, tag: str) -> SemSet:
    """Remove one occurrence of `tag` from every vector that has one."""
    return SemSet.of(
        lowered for lowered in (v.decrement(tag) for v in s.vectors) if lowered is not None
    )


def is_empty(e: ProtocolType) -> bool:
    return semantics(e).is_empty()


def equiv(e: ProtocolType, f: ProtocolType) -> bool:
    return semantics(e) == semantics(f)


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bound:
    limit: Optional[int] = None   # None means unbounded

    @property
    def unbounded(self) -> bool:
        return self.limit is None

    def __str__(self) -> str:
        return "unbounded" if self.unbounded else f"{self.limit}-bounded"


UNBOUNDED = Bound(None)


def bound(e: ProtocolType, tag: str) -> Bound:
    """
    Unbounded iff `*tag` occurs in e; otherwise the largest count of `tag`
    over the protocol's multisets.

    Raises:
        EmptyProtocolError when e admits no trace (bounds are undefined there)
    """
    sem = semantics(e)
    if sem.is_empty():
        raise EmptyProtocolError(f"bound of '{tag}' is undefined on an empty protocol")
    if tag in starred_tags(e):
        return UNBOUNDED
    return Bound(max(v.get(tag) for v in sem.vectors))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

MAX_ORACLE_LEN = 8


def _interleavings(u: tuple, v: tuple) -> Iterable[tuple]:
    n = len(u) + len(v)
    for slots in itertools.combinations(range(n), len(u)):
        chosen = set(slots)
        iu, iv = iter(u), iter(v)
        yield tuple(next(iu) if i in chosen else next(iv) for i in range(n))


@functools.lru_cache(maxsize=None)
def _traces(e: ProtocolType, max_len: int) -> frozenset:
    if isinstance(e, Zero):
        return frozenset()
    if isinstance(e, One):
        return frozenset(((),))
    if isinstance(e, Atom):
        return frozenset(((e.tag,),)) if max_len >= 1 else frozenset()
    if isinstance(e, Star):
        return frozenset((e.tag,) * n for n in range(max_len + 1))
    if isinstance(e, Sum):
        return _traces(e.left, max_len) | _traces(e.right, max_len)
    if isinstance(e, Shuffle):
        out = set()
        for u in _traces(e.left, max_len):
            for v in _traces(e.right, max_len - len(u)):
                out.update(_interleavings(u, v))
        return frozenset(out)
    raise TypeError(f"not a protocol type: {e!r}")


def trace_oracle(e: ProtocolType, max_len: int) -> set:
    """
    Enumerate every trace of e with at most max_len tags, straight from the
    string equations, and project each to its multiset.
    """
    if max_len > MAX_ORACLE_LEN:
        raise ValueError(f"max_len {max_len} exceeds oracle limit {MAX_ORACLE_LEN}")
    return {multiset(s) for s in _traces(e, max_len)}
