from __future__ import annotations

import pytest

from riprover.terms import (
    EPSILON,
    FunctionSymbol,
    Position,
    Substitution,
    Term,
    TypeError_,
    app,
    arrow,
    fill,
    format_position,
    fresh_variable,
    hole,
    is_ground,
    match,
    parse_position,
    positions,
    renaming_apart,
    replace_at,
    apply_subst,
    subterm_at,
    unify,
    var_term,
    variables,
)
from riprover.theory import INT, value_term

IOTA = arrow(INT)  # just INT
F2 = FunctionSymbol("f", arrow(INT, INT, INT))
A = FunctionSymbol("a", INT)
B = FunctionSymbol("b", INT)
C = FunctionSymbol("c", INT)
U1 = FunctionSymbol("u", arrow(INT, INT))
UH = FunctionSymbol("uh", arrow(arrow(INT, INT), INT))
G1 = FunctionSymbol("g", arrow(INT, INT))


def ivar(name):
    return var_term(fresh_variable(name, INT))


def test_positions_of_leaf():
    x = ivar("x")
    assert positions(x) == {EPSILON}


def test_positions_of_application():
    t = app(F2, Term(A), Term(B))
    assert positions(t) == {
        Position((), 0),
        Position((), 1),
        Position((), 2),
        Position((1,), 0),
        Position((2,), 0),
    }


def test_positions_nested_unary():
    # u (g x) with u, g unary: {*0, *1, 1.*0, 1.*1, 1.1.*0}
    x = ivar("x")
    t = app(U1, app(G1, x))
    assert positions(t) == {
        Position((), 0),
        Position((), 1),
        Position((1,), 0),
        Position((1,), 1),
        Position((1, 1), 0),
    }


def test_subterm_at_star():
    t = app(F2, Term(A), Term(B))
    assert subterm_at(t, Position((), 1)) == app(F2, Term(A))
    assert subterm_at(t, Position((2,), 0)) == Term(B)


def test_subterm_at_head_symbol():
    # (u (g x))|_{1.*1} is the bare head g, as in the higher-order overlap
    t = app(U1, app(G1, ivar("x")))
    assert subterm_at(t, Position((1,), 1)) == app(G1)
    assert subterm_at(app(UH, app(G1)), Position((1,), 0)) == app(G1)


def test_replace_at_argument_and_root():
    t = app(F2, Term(A), Term(B))
    assert replace_at(t, Position((1,), 0), Term(C)) == app(F2, Term(C), Term(B))
    s = Term(A)
    assert replace_at(t, EPSILON, s) == s


def test_replace_at_head_position():
    # replacing at a star position substitutes the partial application
    t = app(U1, app(G1, ivar("x")))
    g2 = FunctionSymbol("g2", arrow(INT, INT))
    r = replace_at(t, Position((1,), 1), app(g2))
    assert r == app(U1, app(g2, subterm_at(t, Position((1, 1), 0))))


def test_replace_subterm_roundtrip():
    t = app(F2, app(G1, Term(A)), Term(B))
    for p in positions(t):
        assert replace_at(t, p, subterm_at(t, p)) == t


def test_replace_type_mismatch():
    t = app(F2, Term(A), Term(B))
    with pytest.raises(TypeError_):
        replace_at(t, Position((), 1), Term(A))  # int where int->int expected


def test_apply_subst_homomorphic():
    x, y = fresh_variable("x", arrow(INT, INT)), fresh_variable("y", INT)
    t = app(x, var_term(y))
    gamma = Substitution({x: app(G1), y: Term(A)})
    assert apply_subst(t, gamma) == app(G1, Term(A))


def test_apply_empty_subst_identity():
    t = app(F2, Term(A), ivar("z"))
    assert apply_subst(t, Substitution()) == t


def test_match_basic_and_nonlinear():
    x = fresh_variable("x", INT)
    pat = app(F2, var_term(x), var_term(x))
    assert match(pat, app(F2, Term(A), Term(B))) is None
    sigma = match(pat, app(F2, Term(A), Term(A)))
    assert sigma is not None and sigma.get(x) == Term(A)


def test_match_variable_head():
    x = fresh_variable("x", arrow(INT, INT, INT))
    pat = var_term(x)
    target = app(F2, Term(A))
    # x :: int -> int -> int cannot match f a :: int -> int? f :: int->int->int,
    # f a :: int -> int; adjust types: use pattern of matching type.
    y = fresh_variable("y", arrow(INT, INT))
    sigma = match(var_term(y), target)
    assert sigma is not None and sigma.get(y) == target


def test_match_partial_application_pattern():
    # pattern F x against f a b binds F := f a (binary application view)
    F = fresh_variable("F", arrow(INT, INT))
    x = fresh_variable("x", INT)
    pat = app(F, var_term(x))
    sigma = match(pat, app(F2, Term(A), Term(B)))
    assert sigma is not None
    assert sigma.get(F) == app(F2, Term(A))
    assert sigma.get(x) == Term(B)


def test_match_whole_term_to_variable():
    x = fresh_variable("x", INT)
    t = app(G1, Term(A))
    sigma = match(var_term(x), t)
    assert sigma is not None and sigma.get(x) == t


def test_unify_occurs_check():
    x = fresh_variable("x", INT)
    t = app(G1, var_term(x))
    assert unify(var_term(x), t) is None


def test_unify_basic():
    x, y = fresh_variable("x", INT), fresh_variable("y", INT)
    s = app(F2, var_term(x), Term(B))
    t = app(F2, Term(A), var_term(y))
    sigma = unify(s, t)
    assert sigma is not None
    assert apply_subst(s, sigma) == apply_subst(t, sigma) == app(F2, Term(A), Term(B))


def test_unify_variable_heads():
    # H f n m x =? H g i j y  yields the renaming-style mgu of the paper
    H = FunctionSymbol("H", arrow(arrow(INT, INT), INT, INT, INT, INT))
    f = fresh_variable("f", arrow(INT, INT))
    g = fresh_variable("g", arrow(INT, INT))
    n, m, i, j = (fresh_variable(v, INT) for v in "nmij")
    x, y = fresh_variable("x", INT), fresh_variable("y", INT)
    s = app(H, var_term(f), var_term(n), var_term(m), var_term(x))
    t = app(H, var_term(g), var_term(i), var_term(j), var_term(y))
    sigma = unify(s, t)
    assert sigma is not None
    assert apply_subst(s, sigma) == apply_subst(t, sigma)
    assert len(sigma) == 4


def test_unify_idempotent():
    x, y, z = (fresh_variable(v, INT) for v in "xyz")
    s = app(F2, var_term(x), var_term(y))
    t = app(F2, app(G1, var_term(z)), var_term(z))
    sigma = unify(s, t)
    assert sigma is not None
    for _, image in sigma.items():
        assert apply_subst(image, sigma) == image


def test_unify_applied_variable_with_term():
    # x y =? f a b: binary view unifies x := f a, y := b
    x = fresh_variable("x", arrow(INT, INT))
    y = fresh_variable("y", INT)
    s = app(x, var_term(y))
    t = app(F2, Term(A), Term(B))
    sigma = unify(s, t)
    assert sigma is not None
    assert apply_subst(s, sigma) == t


def test_rename_apart_fresh_and_disjoint():
    x, y = fresh_variable("x", INT), fresh_variable("y", INT)
    t = app(F2, var_term(x), var_term(y))
    rho = renaming_apart({x, y}, {x, y})
    renamed = apply_subst(t, rho)
    assert variables(renamed).isdisjoint({x, y})
    # names got primed for readability
    names = {v.name for v in variables(renamed)}
    assert names == {"x'", "y'"}


def test_rename_apart_twice_disjoint():
    x = fresh_variable("x", INT)
    rho1 = renaming_apart({x}, {x})
    v1 = next(iter(variables(apply_subst(var_term(x), rho1))))
    rho2 = renaming_apart({x}, {x, v1})
    v2 = next(iter(variables(apply_subst(var_term(x), rho2))))
    assert len({x, v1, v2}) == 3


def test_ground_and_variables():
    t = app(F2, Term(A), ivar("q"))
    assert not is_ground(t)
    assert {v.name for v in variables(t)} == {"q"}
    assert is_ground(app(F2, Term(A), Term(B)))


def test_context_fill_with_head_hole():
    h1 = hole(1, arrow(INT, INT))
    c = app(h1, Term(A))
    assert fill(c, app(G1)) == app(G1, Term(A))


def test_position_parse_format_roundtrip():
    for text in ("ε", "1.2", "1.2.*1", "*2"):
        assert format_position(parse_position(text)) in (text, "1.2")
