import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from tsop.automaton import build_automaton, legal_states_oracle
from tsop.errors import EmptyProtocolError
from tsop.protocol import ONE, ZERO, Atom, Shuffle, Star, Sum, derivative, parse_protocol, tags
from tsop.semantics import (
    OMEGA,
    UNBOUNDED,
    Bound,
    GenVector,
    SemSet,
    add_counts,
    bound,
    decrement_count,
    equiv,
    is_empty,
    multiset,
    sem_derivative,
    semantics,
    trace_oracle,
)
from tsop.spec import MessageDecl, MessageKind, ObjectSpec

from strategies import protocols, tag_names

FUTURE_TAGS = ("EMPTY", "FULL", "get", "put")
ORACLE_LEN = 5


def p(text: str, sig=("a", "b", "c", "d")):
    return parse_protocol(text, sig)


def future():
    return parse_protocol("*get . (EMPTY . put + FULL)", FUTURE_TAGS)


property_settings = settings(
    max_examples=500,
    deadline=None,
    suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
)


# ---------------------------------------------------------------------------
# Counts and vectors
# ---------------------------------------------------------------------------

def test_count_arithmetic() -> None:
    assert add_counts(2, 3) == 5
    assert add_counts(OMEGA, 3) is OMEGA
    assert add_counts(0, OMEGA) is OMEGA
    assert decrement_count(1) == 0
    assert decrement_count(0) is None
    assert decrement_count(OMEGA) is OMEGA
    assert repr(OMEGA) == "ω"


def test_vector_subsumption() -> None:
    a1 = GenVector.of({"a": 1})
    aw = GenVector.omega("a")
    assert a1.subsumed_by(aw)
    assert GenVector().subsumed_by(aw)
    assert not aw.subsumed_by(a1)
    assert not GenVector.of({"a": 1, "b": 1}).subsumed_by(aw)


def test_vector_concrete() -> None:
    v = GenVector.of({"a": 1, "b": OMEGA})
    assert set(v.concrete(3)) == {
        (("a", 1),), (("a", 1), ("b", 1)), (("a", 1), ("b", 2)),
    }
    assert list(GenVector.of({"a": 4}).concrete(3)) == []


def test_semset_is_antichain() -> None:
    s = SemSet.of([GenVector(), GenVector.omega("a"), GenVector.of({"a": 2})])
    assert s == SemSet(frozenset([GenVector.omega("a")]))


# ---------------------------------------------------------------------------
# semantics / is_empty / equiv
# ---------------------------------------------------------------------------

def test_semantics_future() -> None:
    assert semantics(future()) == SemSet.of([
        GenVector.of({"EMPTY": 1, "get": OMEGA, "put": 1}),
        GenVector.of({"FULL": 1, "get": OMEGA}),
    ])


def test_semantics_basics() -> None:
    assert semantics(ZERO).is_empty()
    assert semantics(ONE) == SemSet(frozenset([GenVector()]))
    assert semantics(p("*a + 1")) == SemSet(frozenset([GenVector.omega("a")]))


def test_is_empty() -> None:
    assert is_empty(ZERO)
    assert is_empty(p("0 . *a"))
    assert not is_empty(future())
    assert not is_empty(ONE)


def test_equiv() -> None:
    assert equiv(p("a . b"), p("b . a"))
    assert not equiv(ONE, ZERO)
    assert equiv(p("*a + 1"), p("*a"))
    assert equiv(p("a . b + b . a"), p("a . b"))
    assert not equiv(p("a + b"), p("a . b"))


def test_sem_derivative() -> None:
    aw = SemSet(frozenset([GenVector.omega("a")]))
    assert sem_derivative(aw, "a") == aw
    assert sem_derivative(SemSet(frozenset([GenVector.of({"a": 1})])), "b").is_empty()


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------

def test_bounds_future() -> None:
    e = future()
    assert bound(e, "EMPTY") == Bound(1)
    assert bound(e, "FULL") == Bound(1)
    assert bound(e, "put") == Bound(1)
    assert bound(e, "get") == UNBOUNDED
    assert str(bound(e, "put")) == "1-bounded"
    assert str(bound(e, "get")) == "unbounded"


def test_bound_counts_maximum() -> None:
    assert bound(p("a . a + a"), "a") == Bound(2)
    assert bound(p("a + b"), "c") == Bound(0)


def test_bound_of_empty_protocol() -> None:
    with pytest.raises(EmptyProtocolError):
        bound(ZERO, "a")


# ---------------------------------------------------------------------------
# trace_oracle
# ---------------------------------------------------------------------------

def test_oracle_basics() -> None:
    assert trace_oracle(ONE, 3) == {()}
    assert trace_oracle(Atom("a"), 3) == {(("a", 1),)}
    assert trace_oracle(ZERO, 3) == set()


def test_oracle_future() -> None:
    found = trace_oracle(future(), 4)
    assert multiset(["EMPTY", "put", "get", "get"]) in found
    assert multiset(["FULL"]) in found
    assert multiset(["EMPTY", "FULL"]) not in found


def test_oracle_length_limit() -> None:
    with pytest.raises(ValueError):
        trace_oracle(ONE, 9)


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

@property_settings
@given(protocols)
def test_semantics_agrees_with_oracle(e) -> None:
    assert semantics(e).expand(ORACLE_LEN) == trace_oracle(e, ORACLE_LEN)


@property_settings
@given(protocols)
def test_semantics_is_antichain(e) -> None:
    vectors = list(semantics(e).vectors)
    for v in vectors:
        assert not any(w != v and v.subsumed_by(w) for w in vectors)


@property_settings
@given(protocols, tag_names, tag_names)
def test_derivatives_commute(e, t, u) -> None:
    assert equiv(derivative(derivative(e, t), u), derivative(derivative(e, u), t))


@property_settings
@given(protocols, tag_names)
def test_semantic_derivative_matches_syntactic(e, t) -> None:
    assert sem_derivative(semantics(e), t) == semantics(derivative(e, t))


@property_settings
@given(protocols, st.sampled_from(["c", "d"]))
def test_unbounded_tag_is_absorbed(e, t) -> None:
    # the star sits in shuffle position at the top, as in object protocols
    assume(not is_empty(e))
    wrapped = Shuffle(Star(t), e)
    assert bound(wrapped, t) == UNBOUNDED
    assert equiv(derivative(wrapped, t), wrapped)


def test_absorption_needs_shuffle_context() -> None:
    e = p("*c + a")
    assert bound(e, "c") == UNBOUNDED
    assert not equiv(derivative(e, "c"), e)


@property_settings
@given(protocols, st.lists(tag_names, max_size=3))
def test_derivative_sequences_agree_with_oracle(e, word) -> None:
    for t in word:
        e = derivative(e, t)
    assert semantics(e).expand(3) == trace_oracle(e, 3)


@property_settings
@given(protocols)
def test_shuffle_and_sum_laws(e) -> None:
    f = p("a + *c")
    g = p("b . *d")
    assert equiv(Shuffle(e, f), Shuffle(f, e))
    assert equiv(Shuffle(Shuffle(e, f), g), Shuffle(e, Shuffle(f, g)))
    assert equiv(Sum(e, e), e)


@property_settings
@given(protocols)
def test_automaton_states_are_legal_states(e) -> None:
    assume(not is_empty(e))
    spec = ObjectSpec(
        "P",
        tuple(MessageDecl(t, MessageKind.STATE) for t in sorted(tags(e))),
        e,
    )
    a = build_automaton(spec)
    assert {s.counters for s in a.states} == legal_states_oracle(spec)
