from __future__ import annotations

import pytest

from riprover.confluence import (
    critical_peaks,
    ground_confluence_goals,
    sample_joinability,
)
from riprover.engine import Engine, Equation, Refuted, RuleError
from riprover.rewriting import RewriteSystem, Rule
from riprover.terms import (
    EPSILON,
    FunctionSymbol,
    Position,
    app,
    arrow,
    fresh_variable,
    var_term,
)
from riprover.theory import GT, INT, LE, MINUS, conj, eq_int, format_term, value_term
from .conftest import GSYM, HSYM, UNARY


def ivar(name):
    return var_term(fresh_variable(name, INT))


def test_gh_exactly_one_peak(gh, session):
    peaks = critical_peaks(gh, session)
    assert len(peaks) == 1
    peak = peaks[0]
    assert format_term(peak.source) == "H f n m x"
    shown = {format_term(peak.left), format_term(peak.right)}
    assert shown == {"H f (n - 1) m (f x)", "H f (m - 1) n (f x)"}
    assert "n > 0" in format_term(peak.constraint)
    assert "m > 0" in format_term(peak.constraint)


def test_higher_order_peak(session):
    # {f -> g, u (f x) -> h x} overlaps at position 1.*1
    f = FunctionSymbol("f", arrow(INT, INT))
    g = FunctionSymbol("g", arrow(INT, INT))
    u = FunctionSymbol("u", arrow(INT, INT))
    h = FunctionSymbol("h", arrow(INT, INT))
    x = ivar("x")
    r1 = Rule(app(f), app(g), name="F")
    r2 = Rule(app(u, app(f, x)), app(h, x), name="U")
    sys = RewriteSystem({"f": f, "g": g, "u": u, "h": h}, [r1, r2])
    peaks = critical_peaks(sys, session)
    assert len(peaks) == 1
    peak = peaks[0]
    assert format_term(peak.source) == "u (f x)"
    assert {format_term(peak.left), format_term(peak.right)} == {"u (g x)", "h x"}


def test_orthogonal_system_no_peaks(recdown_tailup, session):
    assert critical_peaks(recdown_tailup, session) == []


def test_rev_app_no_peaks(rev_app, session):
    assert critical_peaks(rev_app, session) == []


def test_gc_goals_shape(gh, session):
    peaks = critical_peaks(gh, session)
    goals = ground_confluence_goals(peaks)
    assert len(goals) == 1
    ctx = goals[0]
    assert ctx.left_bound == ctx.right_bound == peaks[0].source
    assert ctx.lhs == peaks[0].left and ctx.rhs == peaks[0].right


def test_gh_ground_confluence_closure(gh, session):
    """Close the G/H peak goal with bounded RI: no requirements remain."""
    eng = Engine(gh, session)
    goals = ground_confluence_goals(critical_peaks(gh, session))
    st = eng.goal_contexts(goals)
    ctx = st.context(1)
    by_name = {v.name: v for v in ctx.all_variables()}
    n, m = by_name["n"], by_name["m"]
    np_ = fresh_variable("n'", INT)
    mp = fresh_variable("m'", INT)
    one = value_term(1)
    h1, h2 = gh.rule_named("H1"), gh.rule_named("H2")

    st = eng.alter_add_definitions(
        st, 1, [(np_, app(MINUS, var_term(n), one)), (mp, app(MINUS, var_term(m), one))]
    )  # ctx 2
    st = eng.simplify(st, 2, "left", "calc", Position((2,), 0))  # 3
    st = eng.simplify(st, 3, "right", "calc", Position((2,), 0))  # 4
    ctx4 = st.context(4)
    assert format_term(ctx4.lhs) == "H f m' n (f x)"
    assert format_term(ctx4.rhs) == "H f n' m (f x)"
    st = eng.induct(st, 4)  # 5
    st = eng.case_by_constraints(
        st, 5, [app(LE, var_term(mp), value_term(0)), app(GT, var_term(mp), value_term(0))]
    )  # 6, 7

    # branch m' <= 0 (hence m' = 0)
    st = eng.simplify(st, 6, "left", h2, EPSILON)  # 8
    st = eng.simplify(st, 8, "left", "calc", Position((2,), 0))  # 9
    st = eng.simplify(st, 9, "right", h2, EPSILON)  # 10
    st = eng.simplify(st, 10, "right", "calc", Position((2,), 0))  # 11
    ctx11 = st.context(11)
    assert format_term(ctx11.lhs) == "H f n' m' (f (f x))"
    assert format_term(ctx11.rhs) == "H f m' n' (f (f x))"
    st = eng.alter_substitute(st, 11, [(mp, value_term(0))])  # 12
    st = eng.case_by_constraints(
        st, 12, [app(LE, var_term(np_), value_term(0)), app(GT, var_term(np_), value_term(0))]
    )  # 13, 14
    st = eng.alter_substitute(st, 13, [(np_, value_term(0))])  # 15
    st = eng.delete(st, 15)
    st = eng.simplify(st, 14, "left", h1, EPSILON)  # 16
    st = eng.simplify(st, 16, "right", h2, EPSILON)  # 17
    ctx17 = st.context(17)
    assert ctx17.lhs == ctx17.rhs
    st = eng.delete(st, 17)

    # branch m' > 0
    st = eng.simplify(st, 7, "left", h2, EPSILON)  # 18
    st = eng.simplify(st, 18, "left", "calc", Position((2,), 0))  # 19
    st = eng.simplify(st, 19, "right", h2, EPSILON)  # 20
    st = eng.simplify(st, 20, "right", "calc", Position((2,), 0))  # 21
    ctx21 = st.context(21)
    assert format_term(ctx21.lhs) == "H f n' m' (f (f x))"
    assert format_term(ctx21.rhs) == "H f m' n' (f (f x))"
    st = eng.case_by_constraints(
        st, 21, [app(LE, var_term(np_), value_term(0)), app(GT, var_term(np_), value_term(0))]
    )  # 22, 23
    # n' <= 0, m' > 0
    st = eng.alter_substitute(st, 22, [(np_, value_term(0))])  # 24
    st = eng.simplify(st, 24, "left", h2, EPSILON)  # 25
    st = eng.simplify(st, 25, "right", h1, EPSILON)  # 26
    ctx26 = st.context(26)
    assert ctx26.lhs == ctx26.rhs
    st = eng.delete(st, 26)
    # n' > 0, m' > 0: step both and close with the induction hypothesis
    npp = fresh_variable("n''", INT)
    mpp = fresh_variable("m''", INT)
    st = eng.simplify(st, 23, "left", h1, EPSILON)  # 27
    st = eng.alter_add_definitions(st, 27, [(npp, app(MINUS, var_term(np_), one))])  # 28
    st = eng.simplify(st, 28, "left", "calc", Position((2,), 0))  # 29
    st = eng.simplify(st, 29, "right", h1, EPSILON)  # 30
    st = eng.alter_add_definitions(st, 30, [(mpp, app(MINUS, var_term(mp), one))])  # 31
    st = eng.simplify(st, 31, "right", "calc", Position((2,), 0))  # 32
    ctx32 = st.context(32)
    assert format_term(ctx32.lhs) == "H f n'' m' (f (f (f x)))"
    assert format_term(ctx32.rhs) == "H f m'' n' (f (f (f x)))"
    st = eng.hypothesis(st, 32, "left", 1, "lr", EPSILON)  # 33
    ctx33 = st.context(33)
    assert ctx33.lhs == ctx33.rhs
    st = eng.delete(st, 33)

    assert st.is_qed()
    assert st.ledger.all_green(), st.ledger.summary()


def by_name_of(state, cid, name):
    ctx = state.context(cid)
    for v in sorted(ctx.all_variables(), key=lambda v: (v.name, v.vid)):
        if v.name == name:
            return v
    raise AssertionError(f"no variable {name} in context {cid}")


def test_sample_joinability_gh(gh, session):
    report = sample_joinability(gh, session, trials=120, depth=3, seed=7)
    assert report.trials > 0
    assert report.ok, report.violations


def test_sample_joinability_rev_app(rev_app, session):
    report = sample_joinability(rev_app, session, trials=120, depth=4, seed=11)
    assert report.ok, report.violations


def test_disprove_toy_non_confluent(session):
    # {a -> b, a -> c}: the peak goal b == c is refuted by distinct heads
    from riprover.engine import Engine

    a = FunctionSymbol("a", INT)
    b = FunctionSymbol("b", INT)
    c = FunctionSymbol("c", INT)
    sys = RewriteSystem(
        {"a": a, "b": b, "c": c},
        [Rule(app(a), app(b), name="A1"), Rule(app(a), app(c), name="A2")],
    )
    peaks = critical_peaks(sys, session)
    assert len(peaks) == 1
    eng = Engine(sys, session)
    st = eng.goal_contexts(ground_confluence_goals(peaks))
    outcome = eng.disprove(st, 1)
    assert isinstance(outcome, Refuted)


def test_peak_soundness_sampled_instances(gh, session):
    """Respecting ground instances of a peak source single-step to both reducts."""
    import random

    from riprover.rewriting import reduce_once
    from riprover.terms import Substitution, apply_subst, variables
    from riprover.theory import INT, evaluate, value_term

    rng = random.Random(41)
    peak = critical_peaks(gh, session)[0]
    from riprover.theory import PLUS

    checked = 0
    for _ in range(80):
        mapping = {}
        for v in sorted(variables(peak.source), key=lambda v: (v.name, v.vid)):
            if v.typ == INT:
                mapping[v] = value_term(rng.randint(-4, 4))
            else:
                mapping[v] = app(PLUS, value_term(1))
        gamma = Substitution(mapping)
        if evaluate(apply_subst(peak.constraint, gamma)) is not True:
            continue
        checked += 1
        source = apply_subst(peak.source, gamma)
        results = {format_term(r.result) for r in reduce_once(source, gh)}
        assert format_term(apply_subst(peak.left, gamma)) in results
        assert format_term(apply_subst(peak.right, gamma)) in results
    assert checked > 5


def test_export_peaks_round_trips(gh, session):
    from riprover.confluence import export_peaks
    from riprover.parser import parse_system

    peaks = critical_peaks(gh, session)
    text = export_peaks(peaks)
    # the export parses back in the context of the same signature
    prelude = (
        "fun G : (int -> int) -> int -> int -> int;\n"
        "fun H : (int -> int) -> int -> int -> int -> int;\n"
    )
    sf = parse_system(prelude + text)
    assert len(sf.goals) == 1
