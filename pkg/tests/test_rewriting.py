from __future__ import annotations

import pytest

from riprover.rewriting import (
    BudgetExceeded,
    RewriteSystem,
    Rule,
    SystemError_,
    calc_rule_for,
    check_quasi_reductivity,
    is_semi_constructor,
    normalize,
    reduce_once,
)
from riprover.terms import (
    FunctionSymbol,
    Position,
    app,
    apply_subst,
    arrow,
    fresh_variable,
    match,
    replace_at,
    subterm_at,
    var_term,
)
from riprover.theory import (
    GE,
    GT,
    INT,
    LT,
    MINUS,
    PLUS,
    TIMES,
    evaluate,
    format_term,
    is_theory_term,
    value_term,
)
from .conftest import BINOP, RECDOWN, TAILUP, CONS, NIL, recdown_tailup_system


def t_recdown(f, n, i, a):
    return app(RECDOWN, f, n, i, a)


def test_calc_rule_shapes():
    r = calc_rule_for(MINUS)
    assert format_term(r.lhs) == "x1 - x2"
    assert r.rhs.is_var
    assert format_term(r.constraint) == "y = x1 - x2"
    rn = calc_rule_for(__import__("riprover.theory", fromlist=["NOT"]).NOT)
    assert format_term(rn.lhs) == "not x1"
    with pytest.raises(SystemError_):
        calc_rule_for(value_term(3).head)


def test_reduce_once_recdown_example(recdown_tailup):
    # recdown f 0 1 a -> f 1 (recdown f 0 (1-1) a) among the reducts
    f = var_term(fresh_variable("f", BINOP))
    a = var_term(fresh_variable("a", INT))
    t = t_recdown(f, value_term(0), value_term(1), a)
    results = {format_term(r.result) for r in reduce_once(t, recdown_tailup)}
    assert "f 1 (recdown f 0 (1 - 1) a)" in results


def test_reduce_once_reproducible(recdown_tailup):
    f = var_term(fresh_variable("f", BINOP))
    a = var_term(fresh_variable("a", INT))
    t = t_recdown(f, value_term(0), value_term(1), a)
    for red in reduce_once(t, recdown_tailup):
        assert apply_subst(red.rule.lhs, red.subst) == subterm_at(t, red.position)
        rebuilt = replace_at(t, red.position, apply_subst(red.rule.rhs, red.subst))
        assert rebuilt == red.result


def test_value_has_no_reducts(recdown_tailup):
    assert reduce_once(value_term(42), recdown_tailup) == []


def test_head_application_reduction():
    # append nil -> id reduces append nil s at the head
    LIST = __import__("riprover.terms", fromlist=["Sort"]).Sort("list")
    append = FunctionSymbol("append", arrow(LIST, LIST, LIST))
    ident = FunctionSymbol("id", arrow(LIST, LIST))
    nil = FunctionSymbol("nil", LIST)
    rule = Rule(app(append, app(nil)), app(ident), name="A1")
    sys = RewriteSystem({"append": append, "id": ident, "nil": nil}, [rule], sorts={LIST})
    s = var_term(fresh_variable("s", LIST))
    t = app(append, app(nil), s)
    results = {format_term(r.result) for r in reduce_once(t, sys)}
    assert "id s" in results


def test_normalize_tailup_factorial_style(recdown_tailup):
    # tailup (*) 1 3 1 normalizes to 6
    t = app(TAILUP, app(TIMES), value_term(1), value_term(3), value_term(1))
    assert normalize(t, recdown_tailup) == value_term(6)


def test_normalize_value_identity(recdown_tailup):
    assert normalize(value_term(9), recdown_tailup) == value_term(9)


def test_normalize_open_term(recdown_tailup):
    # recdown f 0 1 a -> f 1 (f 0 a) for uninterpreted f, a
    f = var_term(fresh_variable("f", BINOP))
    a = var_term(fresh_variable("a", INT))
    t = t_recdown(f, value_term(0), value_term(1), a)
    assert format_term(normalize(t, recdown_tailup)) == "f 1 (f 0 a)"


def test_normalize_budget():
    loop = FunctionSymbol("loop", arrow(INT, INT))
    x = var_term(fresh_variable("x", INT))
    sys = RewriteSystem({"loop": loop}, [Rule(app(loop, x), app(loop, x), name="L")])
    with pytest.raises(BudgetExceeded):
        normalize(app(loop, value_term(0)), sys, budget=50)


def test_semi_constructor(recdown_tailup):
    f = var_term(fresh_variable("f", BINOP))
    partial = app(RECDOWN, app(PLUS), value_term(3))
    assert is_semi_constructor(partial, recdown_tailup)
    assert is_semi_constructor(value_term(5), recdown_tailup)
    full = t_recdown(f, value_term(0), value_term(1), value_term(2))
    assert not is_semi_constructor(full, recdown_tailup)
    # constructor terms are semi-constructor
    assert is_semi_constructor(app(CONS, value_term(1), app(NIL)), recdown_tailup)


def test_semi_constructor_irreducible(recdown_tailup):
    partial = app(RECDOWN, app(PLUS), value_term(3))
    assert reduce_once(partial, recdown_tailup) == []


def test_quasi_reductivity_proved(recdown_tailup, session):
    assert check_quasi_reductivity(recdown_tailup, session).status == "proved"


def test_quasi_reductivity_refuted(session):
    # replace (R2)'s guard by i > n: the class i = n is uncovered
    f = var_term(fresh_variable("f", BINOP))
    n, i, a = (var_term(fresh_variable(v, INT)) for v in "nia")
    r1 = Rule(t_recdown(f, n, i, a), a, app(LT, i, n), name="R1")
    r2 = Rule(
        t_recdown(f, n, i, a),
        app(f, i, t_recdown(f, n, app(MINUS, i, value_term(1)), a)),
        app(GT, i, n),
        name="R2",
    )
    sys = RewriteSystem({"recdown": RECDOWN}, [r1, r2])
    result = check_quasi_reductivity(sys, session)
    assert result.status == "refuted"


def test_quasi_reductivity_structural(rev_app, session):
    assert check_quasi_reductivity(rev_app, session).status == "proved"


def test_quasi_reductivity_gh(gh, session):
    assert check_quasi_reductivity(gh, session).status == "proved"


def test_quasi_reductivity_empty(session):
    sys = RewriteSystem({}, [])
    assert check_quasi_reductivity(sys, session).status == "proved"


def test_quasi_reductivity_missing_constructor_case(rev_app, session):
    # drop the nil rule of rev: cover fails with a nil witness
    rules = [r for r in rev_app.rules if r.name != "R3"]
    sys = RewriteSystem(rev_app.symbols, rules, sorts=rev_app.sorts)
    result = check_quasi_reductivity(sys, session)
    assert result.status == "refuted"
    assert "rev" in result.detail


def test_arity_consistency_enforced():
    LIST = __import__("riprover.terms", fromlist=["Sort"]).Sort("list")
    append = FunctionSymbol("append", arrow(LIST, LIST, LIST))
    ident = FunctionSymbol("id", arrow(LIST, LIST))
    nil = FunctionSymbol("nil", LIST)
    cons = FunctionSymbol("cons2", arrow(INT, LIST, LIST))
    x = var_term(fresh_variable("x", INT))
    y = var_term(fresh_variable("y", LIST))
    z = var_term(fresh_variable("z", LIST))
    r1 = Rule(app(append, app(nil)), app(ident))
    r2 = Rule(app(append, app(cons, x, y), z), app(cons, x, app(append, y, z)))
    with pytest.raises(SystemError_) as e:
        RewriteSystem({"append": append, "id": ident, "nil": nil, "cons2": cons}, [r1, r2], sorts={LIST})
    assert e.value.code == "arity-inconsistency"
