"""Randomized property suites: each runs at least 500 cases."""

from __future__ import annotations

import itertools
import random

import pytest

from riprover.rewriting import RewriteSystem, is_semi_constructor, normalize, reduce_once
from riprover.terms import (
    FunctionSymbol,
    Position,
    Substitution,
    Term,
    app,
    arrow,
    apply_subst,
    fresh_variable,
    is_ground,
    match,
    positions,
    replace_at,
    subterm_at,
    unify,
    var_term,
    variables,
)
from riprover.theory import (
    AND,
    BOOL,
    EQ,
    GE,
    GT,
    INT,
    LE,
    LT,
    MINUS,
    NOT,
    OR,
    PLUS,
    TIMES,
    evaluate,
    format_term,
    is_theory_term,
    value_term,
)

CASES = 500

IOTA = INT
A = FunctionSymbol("pa", IOTA)
B = FunctionSymbol("pb", IOTA)
G1 = FunctionSymbol("pg", arrow(IOTA, IOTA))
F2 = FunctionSymbol("pf", arrow(IOTA, IOTA, IOTA))
SIGNATURE = [A, B, G1, F2]


def check_types(t: Term):
    """Full type reconstruction: every application step must be well-typed."""
    ty = t.head.typ
    for a in t.args:
        check_types(a)
        assert hasattr(ty, "arg"), f"over-application in {t!r}"
        assert ty.arg == a.typ
        ty = ty.res
    assert ty == t.typ


def random_term(rng: random.Random, depth: int, vars_: list) -> Term:
    choices = [A, B] + (["var"] if vars_ else [])
    if depth > 0:
        choices += [G1, F2]
    pick = rng.choice(choices)
    if pick == "var":
        return var_term(rng.choice(vars_))
    if pick in (A, B):
        return Term(pick)
    if pick == G1:
        return app(G1, random_term(rng, depth - 1, vars_))
    return app(F2, random_term(rng, depth - 1, vars_), random_term(rng, depth - 1, vars_))


def test_position_roundtrip():
    rng = random.Random(101)
    vars_ = [fresh_variable(n, IOTA) for n in ("x", "y", "z")]
    for _ in range(CASES):
        t = random_term(rng, rng.randint(0, 4), vars_)
        for p in positions(t):
            assert replace_at(t, p, subterm_at(t, p)) == t


def _ground_universe() -> list[Term]:
    atoms = [Term(A), Term(B)]
    layer = atoms + [app(G1, a) for a in atoms] + [
        app(F2, a, b) for a in atoms for b in atoms
    ]
    return layer


def _is_instance_of(sigma: Substitution, gamma: Substitution, vars_: list) -> bool:
    """gamma = sigma . tau for some tau, checked by joint matching."""
    binding: dict = {}
    for v in vars_:
        s_img = apply_subst(var_term(v), sigma)
        g_img = apply_subst(var_term(v), gamma)
        m = match(s_img, g_img, binding)
        if m is None:
            return False
        binding = m.as_dict()
        for w in variables(s_img):
            binding.setdefault(w, m.get(w) or var_term(w))
    return True


def test_unifier_soundness_and_generality():
    rng = random.Random(202)
    vars_ = [fresh_variable(n, IOTA) for n in ("x", "y", "z")]
    universe = _ground_universe()
    found_unifiable = 0
    for _ in range(CASES):
        s = random_term(rng, rng.randint(0, 3), vars_)
        t = random_term(rng, rng.randint(0, 3), vars_)
        sigma = unify(s, t)
        if sigma is not None:
            found_unifiable += 1
            assert apply_subst(s, sigma) == apply_subst(t, sigma)
            check_types(apply_subst(s, sigma))
        relevant = sorted(variables(s) | variables(t), key=lambda v: v.name)
        if len(relevant) > 3:
            continue
        for images in itertools.product(universe, repeat=len(relevant)):
            gamma = Substitution(dict(zip(relevant, images)))
            if apply_subst(s, gamma) == apply_subst(t, gamma):
                assert sigma is not None, "brute force found a unifier the mgu missed"
                assert _is_instance_of(sigma, gamma, relevant)
                break
    assert found_unifiable > 50


def test_match_typing_and_agreement():
    rng = random.Random(303)
    vars_ = [fresh_variable(n, IOTA) for n in ("x", "y", "z")]
    hits = 0
    for _ in range(CASES):
        pattern = random_term(rng, rng.randint(0, 3), vars_)
        target_vars = [fresh_variable("q", IOTA)]
        target = random_term(rng, rng.randint(0, 3), target_vars)
        sigma = match(pattern, target)
        if sigma is not None:
            hits += 1
            instance = apply_subst(pattern, sigma)
            assert instance == target
            check_types(instance)
        elif is_ground(target):
            # on ground targets matching and unification coincide
            assert unify(pattern, target) is None
    assert hits > 30


def random_theory_term(rng: random.Random, depth: int) -> Term:
    if depth == 0 or rng.random() < 0.3:
        return value_term(rng.randint(-8, 8))
    op = rng.choice([PLUS, MINUS, TIMES])
    return app(op, random_theory_term(rng, depth - 1), random_theory_term(rng, depth - 1))


def test_calc_steps_preserve_evaluation():
    rng = random.Random(404)
    empty = RewriteSystem({}, [])
    for _ in range(CASES):
        t = random_theory_term(rng, rng.randint(1, 3))
        want = evaluate(t)
        for red in reduce_once(t, empty):
            assert red.rule.origin == "calc"
            assert evaluate(red.result) == want
            check_types(red.result)


def test_semi_constructor_terms_are_irreducible(recdown_tailup, rev_app):
    rng = random.Random(505)
    from riprover.session import _random_gsc
    from riprover.terms import Sort

    LIST = Sort("list")
    count = 0
    for k in range(CASES):
        if k % 2 == 0:
            t = _random_gsc(rev_app, LIST, rng)
            sys_ = rev_app
        else:
            t = _random_gsc(recdown_tailup, arrow(INT, INT, INT, INT, INT), rng)
            sys_ = recdown_tailup
        if t is None:
            continue
        count += 1
        assert is_semi_constructor(t, sys_)
        assert reduce_once(t, sys_) == []
    assert count >= CASES // 2


def test_normalize_of_ground_is_semi_constructor(rev_app):
    rng = random.Random(606)
    from riprover.session import _random_gsc
    from riprover.terms import Sort

    LIST = Sort("list")
    checked = 0
    for _ in range(CASES):
        xs = _random_gsc(rev_app, LIST, rng)
        ys = _random_gsc(rev_app, LIST, rng)
        if xs is None or ys is None:
            continue
        t = app(rev_app.symbols["app"], app(rev_app.symbols["rev"], xs, ys), xs)
        nf = normalize(t, rev_app, 50_000)
        assert is_semi_constructor(nf, rev_app)
        checked += 1
    assert checked >= CASES // 2


def test_substitution_application_preserves_types():
    rng = random.Random(707)
    vars_ = [fresh_variable(n, IOTA) for n in ("x", "y", "z")]
    for _ in range(CASES):
        t = random_term(rng, rng.randint(0, 4), vars_)
        images = {v: random_term(rng, rng.randint(0, 2), []) for v in vars_}
        result = apply_subst(t, Substitution(images))
        check_types(result)
        assert is_ground(result)
