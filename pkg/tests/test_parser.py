from __future__ import annotations

import pathlib

import pytest

from riprover.parser import ParseError, SystemFile, parse_system, parse_term_text, print_system
from riprover.theory import TRUE_TERM, format_term

SYSTEMS = pathlib.Path(__file__).resolve().parent.parent / "systems"


def load(name: str) -> SystemFile:
    return parse_system((SYSTEMS / name).read_text())


def test_parse_recdown_tailup():
    sf = load("recdown_tailup.lcstrs")
    sys = sf.system
    assert {s for s in sys.symbols} == {"recdown", "tailup"}
    assert len(sys.rules) == 4
    assert sys.arity_of(sys.symbols["recdown"]) == 4
    assert sys.arity_of(sys.symbols["tailup"]) == 4
    assert len(sf.goals) == 1
    assert format_term(sf.goals[0].lhs) == "recdown f n i a"
    r2 = sys.rule_named("R2")
    assert format_term(r2.rhs) == "f i (recdown f n (i - 1) a)"
    assert format_term(r2.constraint) == "i >= n"


def test_parse_gh_and_lists():
    sf = load("gh.lcstrs")
    assert len(sf.system.rules) == 5
    assert format_term(sf.system.rule_named("R5").constraint) == "n <= 0 /\\ m <= 0"
    sf2 = load("rev_app.lcstrs")
    assert {s for s in sf2.system.symbols} == {"nil", "cons", "app", "rev"}
    assert sf2.system.arity_of(sf2.system.symbols["cons"]) is None  # constructor


def test_roundtrip_systems():
    for name in ("recdown_tailup.lcstrs", "rev_app.lcstrs", "gh.lcstrs", "fg_peak.lcstrs"):
        sf = load(name)
        printed = print_system(sf)
        sf2 = parse_system(printed)
        assert print_system(sf2) == printed


def test_arity_inconsistency_reported():
    text = """
sort list;
fun append : list -> list -> list;
fun id : list -> list;
fun single : list;
append single -> id;
append (append x y) z -> append x (append y z);
"""
    with pytest.raises(ParseError) as e:
        parse_system(text)
    assert "arity" in str(e.value)


def test_empty_file():
    sf = parse_system("")
    assert not sf.system.rules and not sf.goals


def test_parse_error_carries_location():
    with pytest.raises(ParseError) as e:
        parse_system("fun f : int -> ;")
    assert e.value.line == 1 and e.value.column > 0


def test_rule_shape_errors():
    with pytest.raises(ParseError):
        parse_system("x + 1 -> x;")  # theory lhs
    with pytest.raises(ParseError):
        parse_system("fun f : int -> int;\nf x -> y;")  # unbound rhs variable


def test_trust_pragmas_and_axioms():
    text = """
fun f : int -> int;
f x -> x;
axiom x + y == y + x mode gc;
trust termination;
"""
    sf = parse_system(text)
    assert "termination" in sf.system.trust
    assert len(sf.system.axioms) == 1
    assert sf.system.axioms[0].mode == "ground-confluent"


def test_parse_term_text_scopes():
    sf = load("rev_app.lcstrs")
    t = parse_term_text("app (cons 1 nil) nil", sf.system.symbols)
    assert format_term(t) == "app (cons 1 nil) nil"
    t2 = parse_term_text("(+) 1", sf.system.symbols)
    assert format_term(t2) == "(+) 1"
    # partial application is a legal term
    t3 = parse_term_text("app nil", sf.system.symbols, {})
    assert format_term(t3) == "app nil"


def test_negative_literals_and_minus():
    sf = load("recdown_tailup.lcstrs")
    t = parse_term_text("recdown f 0 (-1) a", sf.system.symbols)
    assert format_term(t) == "recdown f 0 (-1) a"
    t2 = parse_term_text("i - 1", sf.system.symbols)
    assert format_term(t2) == "i - 1"
