"""Shared fixtures: the paper-adjacent example systems, built programmatically."""

from __future__ import annotations

import pytest

from riprover.rewriting import RewriteSystem, Rule
from riprover.smt import SmtSession
from riprover.terms import FunctionSymbol, Sort, app, arrow, fresh_variable, var_term
from riprover.theory import (
    GE,
    GT,
    INT,
    LE,
    LT,
    MINUS,
    PLUS,
    TRUE_TERM,
    conj,
    value_term,
)


@pytest.fixture(scope="session")
def session():
    s = SmtSession()
    yield s
    s.close()


BINOP = arrow(INT, INT, INT)

RECDOWN = FunctionSymbol("recdown", arrow(BINOP, INT, INT, INT, INT))
TAILUP = FunctionSymbol("tailup", arrow(BINOP, INT, INT, INT, INT))


def recdown_tailup_system() -> RewriteSystem:
    f = var_term(fresh_variable("f", BINOP))
    n = var_term(fresh_variable("n", INT))
    i = var_term(fresh_variable("i", INT))
    a = var_term(fresh_variable("a", INT))
    one = value_term(1)
    r1 = Rule(app(RECDOWN, f, n, i, a), a, app(LT, i, n), name="R1")
    r2 = Rule(
        app(RECDOWN, f, n, i, a),
        app(f, i, app(RECDOWN, f, n, app(MINUS, i, one), a)),
        app(GE, i, n),
        name="R2",
    )
    m = var_term(fresh_variable("m", INT))
    r3 = Rule(app(TAILUP, f, i, m, a), a, app(GT, i, m), name="R3")
    r4 = Rule(
        app(TAILUP, f, i, m, a),
        app(TAILUP, f, app(PLUS, i, one), m, app(f, i, a)),
        app(LE, i, m),
        name="R4",
    )
    return RewriteSystem({"recdown": RECDOWN, "tailup": TAILUP}, [r1, r2, r3, r4])


LIST = Sort("list")
NIL = FunctionSymbol("nil", LIST)
CONS = FunctionSymbol("cons", arrow(INT, LIST, LIST))
APP = FunctionSymbol("app", arrow(LIST, LIST, LIST))
REV = FunctionSymbol("rev", arrow(LIST, LIST, LIST))


def rev_app_system() -> RewriteSystem:
    x = var_term(fresh_variable("x", INT))
    xs = var_term(fresh_variable("xs", LIST))
    ys = var_term(fresh_variable("ys", LIST))
    nil = app(NIL)
    r1 = Rule(app(APP, nil, ys), ys, name="R1")
    r2 = Rule(app(APP, app(CONS, x, xs), ys), app(CONS, x, app(APP, xs, ys)), name="R2")
    r3 = Rule(app(REV, nil, ys), ys, name="R3")
    r4 = Rule(app(REV, app(CONS, x, xs), ys), app(REV, xs, app(CONS, x, ys)), name="R4")
    return RewriteSystem(
        {"nil": NIL, "cons": CONS, "app": APP, "rev": REV}, [r1, r2, r3, r4], sorts={LIST}
    )


UNARY = arrow(INT, INT)
GSYM = FunctionSymbol("G", arrow(UNARY, INT, INT, INT))
HSYM = FunctionSymbol("H", arrow(UNARY, INT, INT, INT, INT))


def gh_system() -> RewriteSystem:
    f = var_term(fresh_variable("f", UNARY))
    n = var_term(fresh_variable("n", INT))
    m = var_term(fresh_variable("m", INT))
    x = var_term(fresh_variable("x", INT))
    zero = value_term(0)
    one = value_term(1)
    g1 = Rule(app(GSYM, f, n, x), app(GSYM, f, app(MINUS, n, one), app(f, x)), app(GT, n, zero), name="G1")
    g2 = Rule(app(GSYM, f, n, x), x, app(LE, n, zero), name="G2")
    h1 = Rule(
        app(HSYM, f, n, m, x),
        app(HSYM, f, app(MINUS, n, one), m, app(f, x)),
        app(GT, n, zero),
        name="H1",
    )
    h2 = Rule(
        app(HSYM, f, n, m, x),
        app(HSYM, f, app(MINUS, m, one), n, app(f, x)),
        app(GT, m, zero),
        name="H2",
    )
    h3 = Rule(
        app(HSYM, f, n, m, x),
        x,
        conj(app(LE, n, zero), app(LE, m, zero)),
        name="H3",
    )
    return RewriteSystem({"G": GSYM, "H": HSYM}, [g1, g2, h1, h2, h3])


@pytest.fixture(scope="session")
def recdown_tailup():
    return recdown_tailup_system()


@pytest.fixture(scope="session")
def rev_app():
    return rev_app_system()


@pytest.fixture(scope="session")
def gh():
    return gh_system()
