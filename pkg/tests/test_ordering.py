from __future__ import annotations

import pytest

from riprover.ordering import (
    BoundingRequirement,
    RequirementLedger,
    abstract_to_rule,
    baseline_geq,
    discharge,
    mul_compare,
    mul_holds,
    q_rules,
)
from riprover.rewriting import Rule
from riprover.terms import FunctionSymbol, app, arrow, fresh_variable, var_term
from riprover.theory import (
    GE,
    GT,
    INT,
    MINUS,
    PLUS,
    TRUE_TERM,
    conj,
    eq_int,
    format_term,
    value_term,
)
from .conftest import BINOP, RECDOWN, TAILUP


def ivar(name):
    return var_term(fresh_variable(name, INT))


def fvar(name):
    return var_term(fresh_variable(name, BINOP))


def req1_parts():
    f, n, i, a = fvar("f"), ivar("n"), ivar("i"), ivar("a")
    ip, np_ = ivar("i'"), ivar("n'")
    psi = conj(
        eq_int(ip, app(MINUS, i, value_term(1))),
        eq_int(np_, app(PLUS, n, value_term(1))),
        app(GE, i, n),
    )
    lhs = app(RECDOWN, f, n, i, a)
    rhs = app(f, i, app(TAILUP, f, n, ip, a))
    return lhs, rhs, psi, (f, n, i, a, ip, np_)


def test_baseline_subterm(recdown_tailup, session):
    # f i (tailup f n i' a) >= tailup f n i' a by one strict subterm step
    lhs, rhs, psi, _ = req1_parts()
    inner = rhs.args[1]
    chain = baseline_geq(rhs, inner, psi, recdown_tailup, session, strict=True)
    assert chain is not None and len(chain) == 1


def test_baseline_reflexive(recdown_tailup, session):
    s = ivar("s")
    assert baseline_geq(s, s, TRUE_TERM, recdown_tailup, session) == []


def test_baseline_rewrite_chain(recdown_tailup, session):
    # recdown f 0 1 a >= f 1 (f 0 a) via three rewrite steps
    f, a = fvar("f"), ivar("a")
    s = app(RECDOWN, f, value_term(0), value_term(1), a)
    t = app(f, value_term(1), app(f, value_term(0), a))
    chain = baseline_geq(s, t, TRUE_TERM, recdown_tailup, session, strict=True)
    assert chain is not None and len(chain) >= 3


def test_baseline_calc_step_with_definition(recdown_tailup, session):
    # under psi with i' = i - 1, the subterm i - 1 rewrites to i'
    f, n, i, a = fvar("f"), ivar("n"), ivar("i"), ivar("a")
    ip = ivar("i'")
    psi = conj(eq_int(ip, app(MINUS, i, value_term(1))), app(GE, i, n))
    s = app(RECDOWN, f, n, app(MINUS, i, value_term(1)), a)
    t = app(RECDOWN, f, n, ip, a)
    chain = baseline_geq(s, t, psi, recdown_tailup, session, strict=True)
    assert chain is not None


def test_discharge_bullet(recdown_tailup, session):
    req = BoundingRequirement(None, ivar("x"), TRUE_TERM, strict=False)
    assert discharge(req, recdown_tailup, session).status == "discharged-syntactic"


def test_discharge_strict_equal_fails(recdown_tailup, session):
    x = ivar("x")
    req = BoundingRequirement(x, x, TRUE_TERM, strict=True)
    assert discharge(req, recdown_tailup, session).status == "failed"
    # with an unsatisfiable constraint the comparison is vacuous
    bad = app(GT, value_term(0), value_term(1))
    req2 = BoundingRequirement(x, x, bad, strict=True)
    assert discharge(req2, recdown_tailup, session).status == "discharged-syntactic"


def test_discharge_req1_stays_pending(recdown_tailup, session):
    lhs, rhs, psi, _ = req1_parts()
    req = BoundingRequirement(lhs, rhs, psi, strict=True)
    assert discharge(req, recdown_tailup, session).status == "pending"


def test_discharge_uses_q_rules(recdown_tailup, session):
    # with REQ1 abstracted into Q, the bound recdown... > tailup f n i' a discharges
    lhs, rhs, psi, _ = req1_parts()
    req1 = BoundingRequirement(lhs, rhs, psi, strict=True)
    qrule = abstract_to_rule(req1, 0, RequirementLedger()).rule
    assert qrule is not None
    inner = rhs.args[1]
    req2 = BoundingRequirement(lhs, inner, psi, strict=True)
    assert discharge(req2, recdown_tailup, session, qrules=[qrule]).status == "discharged-syntactic"


def test_ledger_dedup_modulo_renaming(recdown_tailup):
    lhs, rhs, psi, _ = req1_parts()
    ledger = RequirementLedger()
    ledger, i1 = ledger.add(BoundingRequirement(lhs, rhs, psi, strict=True))
    # same requirement with renamed variables
    lhs2, rhs2, psi2, _ = req1_parts()
    ledger2, i2 = ledger.add(BoundingRequirement(lhs2, rhs2, psi2, strict=True))
    assert i1 == i2 and len(ledger2.items) == 1


def test_mul_compare_reflexive_weak(recdown_tailup, session):
    a, b = ivar("a"), ivar("b")
    assert mul_holds((a, b), (a, b), TRUE_TERM, False, recdown_tailup, session)


def test_mul_compare_strict_irreflexive(recdown_tailup, session):
    s, t = ivar("s"), ivar("t")
    # {s,t} >mul {s,t}: every alternative has an unsatisfiable strict part
    assert not mul_holds((s, t), (s, t), TRUE_TERM, True, recdown_tailup, session)
    alts = mul_compare((s, t), (s, t), TRUE_TERM, True)
    for alt in alts:
        assert any(
            discharge(r, recdown_tailup, session).status != "discharged-syntactic" for r in alt
        )


def test_mul_compare_strict_via_components(recdown_tailup, session):
    # {cons-like bigger, x} >mul {smaller, x}: strict in one, weak equal other
    f, a, b = fvar("f"), ivar("a"), ivar("b")
    big = app(f, a, b)
    assert mul_holds((big, a), (b, a), TRUE_TERM, True, recdown_tailup, session)


def test_abstract_req1(recdown_tailup):
    lhs, rhs, psi, _ = req1_parts()
    result = abstract_to_rule(BoundingRequirement(lhs, rhs, psi, strict=True), 0, RequirementLedger())
    assert result.rule is not None
    assert format_term(result.rule.lhs) == format_term(lhs)
    assert format_term(result.rule.rhs) == format_term(rhs)


def test_abstract_variable_lhs():
    x = ivar("x")
    req = BoundingRequirement(x, value_term(0), TRUE_TERM, strict=True)
    result = abstract_to_rule(req, 0, RequirementLedger())
    assert result.rule is None and "variable" in result.reason


def test_abstract_type_bridge():
    # f (F x) y > y - 1 [x > y] with f :: int -> int -> list becomes
    # f z y -> cast (y - 1) with a generated bridging constructor
    from riprover.terms import Sort

    LIST = Sort("list")
    fsym = FunctionSymbol("f", arrow(INT, INT, LIST))
    F = var_term(fresh_variable("F", arrow(INT, INT)))
    x, y = ivar("x"), ivar("y")
    lhs = app(fsym, app(F, x), y)
    rhs = app(MINUS, y, value_term(1))
    req = BoundingRequirement(lhs, rhs, app(GT, x, y), strict=True)
    result = abstract_to_rule(req, 0, RequirementLedger())
    assert result.rule is not None
    assert result.rule.lhs.args[0].is_var
    assert result.rule.rhs.head.name.startswith("cast")
    assert result.rule.constraint == TRUE_TERM  # guard on x is dropped
    assert result.ledger is not None and len(result.ledger.bridges) == 1
