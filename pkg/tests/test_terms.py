import hypothesis.strategies as st
from hypothesis import given, settings

from clpbn.terms import (
    EMPTY_SUBST,
    Atom,
    FreshVars,
    Struct,
    Var,
    is_ground,
    is_variant,
    list_items,
    mklist,
    rename_term,
    term_equal,
    term_sort_key,
    unify,
    vars_of,
)

X = Var(1, "X")
Y = Var(2, "Y")
Z = Var(3, "Z")


def f(*args):
    return Struct("f", tuple(args))


def test_unify_atoms():
    assert unify(Atom("a"), Atom("a")) is not None
    assert unify(Atom("a"), Atom("b")) is None


def test_unify_binds_var():
    s = unify(X, Atom("a"))
    assert s is not None
    assert term_equal(s.resolve(X), Atom("a"))


def test_unify_struct_recurses():
    s = unify(f(X, Atom("b")), f(Atom("a"), Y))
    assert s is not None
    assert term_equal(s.resolve(X), Atom("a"))
    assert term_equal(s.resolve(Y), Atom("b"))


def test_unify_functor_mismatch():
    assert unify(f(X), Struct("g", (X,))) is None
    assert unify(f(X), f(X, Y)) is None


def test_unify_var_aliasing():
    s = unify(X, Y)
    assert s is not None
    s2 = unify(s.resolve(X), Atom("a"), s)
    assert term_equal(s2.resolve(Y), Atom("a"))


def test_unify_numbers():
    assert unify(1, 1) is not None
    assert unify(1, 2) is None
    assert unify(1.5, 1.5) is not None


def test_mklist_roundtrip():
    items = [Atom("a"), 3, f(X)]
    lst = mklist(items)
    back = list_items(lst)
    assert back is not None
    assert len(back) == 3
    assert all(term_equal(a, b) for a, b in zip(items, back))


def test_list_items_rejects_improper():
    improper = Struct(".", (Atom("a"), Atom("b")))
    assert list_items(improper) is None


def test_vars_of_and_groundness():
    t = f(X, f(Y, Atom("a")), 3)
    ids = {v.id for v in vars_of(t)}
    assert ids == {1, 2}
    assert not is_ground(t)
    assert is_ground(f(Atom("a"), 3))


def test_rename_is_variant():
    t = f(X, f(Y, X))
    mapping = {}
    t2 = rename_term(t, mapping, FreshVars())
    assert is_variant(t, t2)
    # shared variables stay shared: both X occurrences map to one new var
    assert mapping[X.id].id == t2.args[0].id == t2.args[1].args[1].id
    # renaming again with the same mapping reproduces the same term
    assert term_equal(t2, rename_term(t, mapping, FreshVars()))


def test_is_variant_distinguishes_shared_vars():
    assert is_variant(f(X, X), f(Y, Y))
    assert not is_variant(f(X, X), f(X, Y))
    assert not is_variant(f(X), f(Atom("a")))


def test_term_sort_key_total_order():
    terms = [Atom("b"), 2, 1.5, Atom("a"), f(Atom("a")), X, f(X, Y)]
    ordered = sorted(terms, key=term_sort_key)
    # sorting twice gives the same order (key is total and stable)
    assert sorted(ordered, key=term_sort_key) == ordered


# --- properties ----------------------------------------------------------------

_atoms = st.sampled_from([Atom("a"), Atom("b"), Atom("c")])
_vars = st.sampled_from([X, Y, Z])
_numbers = st.integers(min_value=-3, max_value=3)

_terms = st.recursive(
    st.one_of(_atoms, _vars, _numbers),
    lambda inner: st.builds(
        lambda functor, args: Struct(functor, tuple(args)),
        st.sampled_from(["f", "g"]),
        st.lists(inner, min_size=1, max_size=3),
    ),
    max_leaves=8,
)


@given(_terms)
def test_unify_reflexive(t):
    assert unify(t, t) is not None


@given(_terms, _terms)
def test_unify_makes_terms_equal(t1, t2):
    s = unify(t1, t2)
    if s is not None:
        assert term_equal(s.resolve(t1), s.resolve(t2))


@given(_terms, _terms)
def test_unify_symmetric_in_success(t1, t2):
    assert (unify(t1, t2) is None) == (unify(t2, t1) is None)


@settings(max_examples=60)
@given(_terms)
def test_rename_preserves_structure(t):
    t2 = rename_term(t, {}, FreshVars())
    assert is_variant(t, t2)
    if is_ground(t):
        assert term_equal(t, t2)


@given(_terms)
def test_resolve_after_self_unify_is_fixpoint(t):
    s = unify(t, t, EMPTY_SUBST)
    r = s.resolve(t)
    assert term_equal(r, s.resolve(r))
