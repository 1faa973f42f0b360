"""Built-in termination oracle for R together with the abstracted Q rules.

A pragmatic dependency-pair fragment: pairs are extracted from defined-symbol
calls in right-hand sides, the graph is estimated by cap-and-rename
unification, and each cycle must fall to one of three processors:

  1. the subterm criterion (a simple projection),
  2. an SMT-verified linear integer measure (with optional max(arg, 0)
     clamping) that strictly decreases and is bounded below under the rule
     constraint, or
  3. a fixed structural size interpretation with per-cycle marked measures,
     compared coefficient-wise.

Variable-headed calls are skipped only when the head variable is a direct
left-hand-side argument.  Anything not covered returns unknown and the
session then offers trust mode.  A concrete loop search runs first so plain
cycles are reported as failures with a witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .rewriting import Reduct, RewriteSystem, Rule, reduce_once
from .smt import SmtSession, render_term
from .terms import (
    FunctionSymbol,
    Substitution,
    Term,
    Variable,
    app,
    apply_subst,
    fresh_variable,
    is_ground,
    positions,
    renaming_apart,
    subterm_at,
    type_args,
    unify,
    var_term,
    variables,
)
from .theory import (
    INT,
    THEORY_SORTS,
    TRUE_TERM,
    format_term,
    is_theory_term,
    value_term,
)


@dataclass(frozen=True)
class DependencyPair:
    lhs: Term
    rhs: Term
    constraint: Term
    origin: str

    def __repr__(self):
        return (
            f"{format_term(self.lhs)} => {format_term(self.rhs)}"
            + (f" [{format_term(self.constraint)}]" if self.constraint != TRUE_TERM else "")
        )


@dataclass
class TerminationResult:
    status: str  # proved | failed | unknown
    reason: str = ""
    precedence: list[str] = field(default_factory=list)
    measures: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def certificate_lines(self) -> list[str]:
        out = [f"termination: {self.status}"]
        if self.reason:
            out.append(f"  {self.reason}")
        if self.precedence:
            out.append("  precedence: " + " > ".join(self.precedence))
        for sym, m in sorted(self.measures.items()):
            out.append(f"  measure {sym}: {m}")
        out.extend(f"  note: {n}" for n in self.notes)
        return out


# ---------------------------------------------------------------------------
# Concrete loop detection


def _ground_seeds(rules: list[Rule], limit: int = 40) -> list[Term]:
    seeds = []
    for rule in rules:
        mapping: dict[Variable, Term] = {}
        ok = True
        for v in sorted(rule.all_variables(), key=lambda v: (v.name, v.vid)):
            if v.typ == INT:
                mapping[v] = value_term(0)
            elif v.typ in THEORY_SORTS:
                mapping[v] = value_term(True)
            else:
                ok = False
                break
        if not ok:
            continue
        seed = apply_subst(rule.lhs, Substitution(mapping))
        if is_ground(seed):
            seeds.append(seed)
        if len(seeds) >= limit:
            break
    return seeds


def _find_cycle(sys_all: RewriteSystem, seeds: list[Term], steps: int = 60) -> Optional[list[Term]]:
    for seed in seeds:
        path = [seed]
        seen = {format_term(seed)}
        current = seed
        for _ in range(steps):
            reducts = reduce_once(current, sys_all)
            if not reducts:
                break
            current = reducts[0].result
            key = format_term(current)
            if key in seen:
                # walk the recorded path to present the loop
                return path + [current]
            seen.add(key)
            path.append(current)
    return None


# ---------------------------------------------------------------------------
# Dependency pair extraction


def _dp_arities(rules: list[Rule]) -> Optional[dict[FunctionSymbol, int]]:
    table: dict[FunctionSymbol, int] = {}
    for rule in rules:
        head = rule.lhs.head
        assert isinstance(head, FunctionSymbol)
        k = len(rule.lhs.args)
        if table.setdefault(head, k) != k:
            return None
    return table


def _extract_pairs(rules: list[Rule], arities: dict[FunctionSymbol, int]) -> tuple[Optional[list[DependencyPair]], list[str]]:
    pairs: list[DependencyPair] = []
    notes: list[str] = []
    for rule in rules:
        direct_args = {
            a.head for a in rule.lhs.args if a.is_var
        }
        seen_prefices: set[str] = set()
        for p in sorted(positions(rule.rhs), key=lambda p: (p.path, p.star)):
            u = subterm_at(rule.rhs, p)
            if isinstance(u.head, Variable):
                if not u.args:
                    continue
                if u.head in direct_args:
                    notes.append(
                        f"skipped variable-head call {format_term(u)} in {rule.name or rule.origin}"
                        " (head is a direct lhs argument)"
                    )
                    continue
                return None, [f"variable-head call {format_term(u)} in {rule.name or rule.origin} not analyzable"]
            g = u.head
            if g not in arities or len(u.args) < arities[g]:
                continue
            prefix = Term(g, u.args[: arities[g]])
            key = format_term(prefix)
            if key in seen_prefices:
                continue
            seen_prefices.add(key)
            pairs.append(DependencyPair(rule.lhs, prefix, rule.constraint, rule.name or rule.origin))
    return pairs, notes


# ---------------------------------------------------------------------------
# Graph estimation (cap and rename)


def _cap(t: Term, arities: dict[FunctionSymbol, int]) -> Term:
    counter = itertools.count(1)

    def go(u: Term) -> Term:
        if isinstance(u.head, Variable):
            return var_term(fresh_variable(f"cap{next(counter)}", u.typ))
        sym = u.head
        if sym.kind == "theory" and not sym.is_value and len(u.args) == len(type_args(sym.typ)):
            return var_term(fresh_variable(f"cap{next(counter)}", u.typ))
        ar = arities.get(sym)
        if ar is not None and len(u.args) >= ar:
            return var_term(fresh_variable(f"cap{next(counter)}", u.typ))
        return Term(sym, tuple(go(a) for a in u.args))

    return go(t)


def _edge(dp1: DependencyPair, dp2: DependencyPair, arities) -> bool:
    if dp1.rhs.head != dp2.lhs.head:
        return False
    # cap the arguments only: the marked root symbol itself never reduces
    capped = Term(dp1.rhs.head, tuple(_cap(a, arities) for a in dp1.rhs.args))
    renaming = renaming_apart(variables(capped), variables(dp2.lhs))
    return unify(apply_subst(capped, renaming), dp2.lhs) is not None


def _sccs(nodes: list[int], edges: dict[int, set[int]]) -> list[list[int]]:
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = itertools.count()

    def strongconnect(v: int):
        work = [(v, iter(sorted(edges.get(v, ()))))]
        index[v] = low[v] = next(counter)
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(edges.get(w, ())))))
                    advanced = True
                    break
                elif w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(sorted(comp))

    for v in nodes:
        if v not in index:
            strongconnect(v)
    return out


# ---------------------------------------------------------------------------
# Processor 1: subterm criterion


def _is_subterm(big: Term, small: Term) -> bool:
    return any(subterm_at(big, p) == small for p in positions(big))


def _subterm_criterion(scc: list[DependencyPair]) -> Optional[tuple[list[DependencyPair], dict[str, str]]]:
    symbols = sorted({dp.lhs.head.name for dp in scc} | {dp.rhs.head.name for dp in scc})
    counts: dict[str, int] = {}
    for dp in scc:
        for side in (dp.lhs, dp.rhs):
            name = side.head.name
            counts[name] = min(counts.get(name, len(side.args)), len(side.args))
    choices = []
    for name in symbols:
        if counts[name] == 0:
            return None
        choices.append(range(1, counts[name] + 1))
    for pi in itertools.product(*choices):
        proj = dict(zip(symbols, pi))
        strict: list[DependencyPair] = []
        ok = True
        for dp in scc:
            pl = dp.lhs.args[proj[dp.lhs.head.name] - 1]
            pr = dp.rhs.args[proj[dp.rhs.head.name] - 1]
            if pl == pr:
                continue
            if _is_subterm(pl, pr):
                strict.append(dp)
            else:
                ok = False
                break
        if ok and strict:
            measures = {name: f"argument {proj[name]} (subterm)" for name in symbols}
            return strict, measures
    return None


# ---------------------------------------------------------------------------
# Processor 2: integer measures via the solver


def _renderable_theory(t: Term) -> bool:
    if isinstance(t.head, Variable):
        return not t.args and t.head.typ in THEORY_SORTS
    if t.head.kind != "theory":
        return False
    if t.head.is_value:
        return not t.args
    return len(t.args) == len(type_args(t.head.typ)) and all(_renderable_theory(a) for a in t.args)


def _int_positions(scc: list[DependencyPair]) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    heads: dict[str, list[Term]] = {}
    for dp in scc:
        heads.setdefault(dp.lhs.head.name, []).append(dp.lhs)
        heads.setdefault(dp.rhs.head.name, []).append(dp.rhs)
    for name, terms in heads.items():
        count = min(len(t.args) for t in terms)
        usable = []
        for j in range(count):
            if all(
                t.args[j].typ == INT and _renderable_theory(t.args[j]) for t in terms
            ):
                usable.append(j)
        out[name] = usable
    return out


def _measure_candidates(npos: int) -> list[tuple[str, tuple[int, ...]]]:
    plain = [
        ("plain", v)
        for v in sorted(
            itertools.product(range(-2, 3), repeat=npos),
            key=lambda v: (sum(abs(c) for c in v), v),
        )
        if any(v)
    ]
    clamped = [
        ("max", v)
        for v in sorted(
            itertools.product(range(0, 3), repeat=npos),
            key=lambda v: (sum(abs(c) for c in v), v),
        )
        if any(v)
    ]
    return plain + clamped


def _measure_expr(kind: str, vec: tuple[int, ...], args: list[Term], posns: list[int]) -> str:
    parts = []
    for coeff, j in zip(vec, posns):
        if coeff == 0:
            continue
        e = render_term(args[j])
        if kind == "max":
            e = f"(ite (>= {e} 0) {e} 0)"
        if coeff == 1:
            parts.append(e)
        else:
            parts.append(f"(* {coeff} {e})")
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def _measure_text(kind: str, vec: tuple[int, ...], lhs: Term, posns: list[int]) -> str:
    parts = []
    for coeff, j in zip(vec, posns):
        if coeff == 0:
            continue
        arg = lhs.args[j]
        shown = format_term(arg) if arg.is_var else f"arg{j + 1}"
        if kind == "max":
            shown = f"max({shown}, 0)"
        if coeff == 1:
            parts.append(shown)
        elif coeff == -1:
            parts.append(f"- {shown}")
        else:
            parts.append(f"{coeff} * {shown}")
    positives = [p for p in parts if not p.startswith("- ")]
    negatives = [p[2:] for p in parts if p.startswith("- ")]
    text = " + ".join(positives)
    for n in negatives:
        text = f"{text} - {n}" if text else f"- {n}"
    return text or "0"


def _int_measure_processor(
    scc: list[DependencyPair], session: SmtSession, combo_cap: int = 4000
) -> Optional[tuple[list[DependencyPair], dict[str, str]]]:
    posns = _int_positions(scc)
    symbols = sorted(posns)
    if any(not posns[s] for s in symbols):
        return None
    candidate_lists = [_measure_candidates(len(posns[s])) for s in symbols]
    total = 1
    for c in candidate_lists:
        total *= len(c)
    combos = itertools.islice(itertools.product(*candidate_lists), combo_cap)
    for combo in combos:
        assignment = dict(zip(symbols, combo))
        strict: list[DependencyPair] = []
        ok = True
        for dp in scc:
            kind_l, vec_l = assignment[dp.lhs.head.name]
            kind_r, vec_r = assignment[dp.rhs.head.name]
            ml = _measure_expr(kind_l, vec_l, list(dp.lhs.args), posns[dp.lhs.head.name])
            mr = _measure_expr(kind_r, vec_r, list(dp.rhs.args), posns[dp.rhs.head.name])
            decls = _dp_declarations(dp)
            phi = render_term(dp.constraint)
            strict_formula = f"(=> {phi} (and (> {ml} {mr}) (>= {ml} 0)))"
            if session.valid_formula(decls, strict_formula).status == "valid":
                strict.append(dp)
                continue
            weak_formula = f"(=> {phi} (>= {ml} {mr}))"
            if session.valid_formula(decls, weak_formula).status != "valid":
                ok = False
                break
        if ok and strict:
            measures = {}
            for name in symbols:
                kind, vec = assignment[name]
                sample = next(dp.lhs for dp in scc if dp.lhs.head.name == name) if any(
                    dp.lhs.head.name == name for dp in scc
                ) else next(dp.rhs for dp in scc if dp.rhs.head.name == name)
                measures[name] = _measure_text(kind, vec, sample, posns[name])
            return strict, measures
    return None


def _dp_declarations(dp: DependencyPair) -> list[str]:
    from .smt import _smt_var, _sort_name

    decls = []
    vars_ = set()
    for t in (dp.constraint, *dp.lhs.args, *dp.rhs.args):
        for v in variables(t):
            if v.typ in THEORY_SORTS:
                vars_.add(v)
    for v in sorted(vars_, key=lambda v: (v.name, v.vid)):
        decls.append(f"(declare-fun {_smt_var(v)} () {_sort_name(v.typ)})")
    return decls


# ---------------------------------------------------------------------------
# Processor 3: structural size interpretation


class Poly:
    """Linear polynomial over term variables with integer coefficients."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs=None, const=0):
        self.coeffs = dict(coeffs or {})
        self.const = const

    def add(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for v, c in other.coeffs.items():
            out[v] = out.get(v, 0) + c
        return Poly(out, self.const + other.const)

    def sub(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for v, c in other.coeffs.items():
            out[v] = out.get(v, 0) - c
        return Poly(out, self.const - other.const)

    def nonneg(self) -> bool:
        return self.const >= 0 and all(c >= 0 for c in self.coeffs.values())

    def positive(self) -> bool:
        return self.const >= 1 and all(c >= 0 for c in self.coeffs.values())


def _size_sorted(typ) -> bool:
    from .terms import Sort

    return isinstance(typ, Sort) and typ not in THEORY_SORTS


def _no_bad_variable_apps(t: Term) -> bool:
    """The interpretation ignores variable-headed applications, which is
    only sound when such subterms have theory type."""
    if isinstance(t.head, Variable) and t.args and _size_sorted(t.typ):
        return False
    return all(_no_bad_variable_apps(a) for a in t.args)


def _size_poly(t: Term, sys: RewriteSystem, arities) -> Poly:
    if not _size_sorted(t.typ):
        return Poly()
    if t.is_var:
        return Poly({t.head: 1})
    if isinstance(t.head, Variable):
        return Poly()
    sym = t.head
    total = Poly()
    for a in t.args:
        if _size_sorted(a.typ):
            total = total.add(_size_poly(a, sys, arities))
    is_constructor = sym not in arities and sym.kind == "term"
    if is_constructor and t.args:
        total = total.add(Poly({}, 1))
    return total


def _marked_poly(option, t: Term, sys: RewriteSystem, arities) -> Optional[Poly]:
    kind = option[0]
    if kind in ("sum", "sum1"):
        out = Poly()
        for a in t.args:
            if _size_sorted(a.typ):
                out = out.add(_size_poly(a, sys, arities))
        if kind == "sum1":
            out = out.add(Poly({}, 1))
        return out
    j = option[1]
    if j >= len(t.args) or not _size_sorted(t.args[j].typ):
        return None
    return _size_poly(t.args[j], sys, arities)


def _size_interpretation_processor(
    scc: list[DependencyPair], all_rules: list[Rule], sys: RewriteSystem, arities
) -> Optional[tuple[list[DependencyPair], dict[str, str]]]:
    for rule in all_rules:
        if not _no_bad_variable_apps(rule.lhs) or not _no_bad_variable_apps(rule.rhs):
            return None
        diff = _size_poly(rule.lhs, sys, arities).sub(_size_poly(rule.rhs, sys, arities))
        if not diff.nonneg():
            return None
    symbols = sorted({dp.lhs.head.name for dp in scc} | {dp.rhs.head.name for dp in scc})
    arg_counts = {}
    for dp in scc:
        for side in (dp.lhs, dp.rhs):
            name = side.head.name
            arg_counts[name] = min(arg_counts.get(name, len(side.args)), len(side.args))
    options_per_symbol = []
    for name in symbols:
        opts = [("sum",), ("sum1",)] + [("arg", j) for j in range(arg_counts[name])]
        options_per_symbol.append(opts)
    for combo in itertools.islice(itertools.product(*options_per_symbol), 4000):
        assignment = dict(zip(symbols, combo))
        strict: list[DependencyPair] = []
        ok = True
        for dp in scc:
            ml = _marked_poly(assignment[dp.lhs.head.name], dp.lhs, sys, arities)
            mr = _marked_poly(assignment[dp.rhs.head.name], dp.rhs, sys, arities)
            if ml is None or mr is None:
                ok = False
                break
            diff = ml.sub(mr)
            if diff.positive():
                strict.append(dp)
            elif not diff.nonneg():
                ok = False
                break
        if ok and strict:
            shown = {}
            for name in symbols:
                opt = assignment[name]
                shown[name] = (
                    "size sum of arguments"
                    if opt[0] == "sum"
                    else "1 + size sum of arguments"
                    if opt[0] == "sum1"
                    else f"size of argument {opt[1] + 1}"
                )
            return strict, shown
    return None


# ---------------------------------------------------------------------------
# Driver


def check_termination(
    sys: RewriteSystem, qrules: list[Rule], session: SmtSession
) -> TerminationResult:
    all_rules = list(sys.rules) + list(qrules)
    try:
        sys_all = sys.with_extra_rules(list(qrules))
    except Exception as e:
        return TerminationResult("unknown", f"cannot combine R and Q: {e}")
    cycle = _find_cycle(sys_all, _ground_seeds(all_rules))
    if cycle is not None:
        shown = " -> ".join(format_term(t) for t in cycle)
        return TerminationResult("failed", f"cycle {shown}")
    arities = _dp_arities(all_rules)
    if arities is None:
        return TerminationResult("unknown", "inconsistent arities across R and Q")
    pairs, notes = _extract_pairs(all_rules, arities)
    if pairs is None:
        return TerminationResult("unknown", notes[0] if notes else "unanalyzable call")
    result = TerminationResult("proved", notes=notes)
    # precedence: topological order of head symbols in the pair graph
    sym_edges: dict[str, set[str]] = {}
    for dp in pairs:
        if dp.lhs.head.name != dp.rhs.head.name:
            sym_edges.setdefault(dp.lhs.head.name, set()).add(dp.rhs.head.name)
    result.precedence = _topo_order(sym_edges)

    remaining = list(pairs)
    for _ in range(10):
        if not remaining:
            return result
        n = len(remaining)
        edges: dict[int, set[int]] = {}
        for i in range(n):
            for j in range(n):
                if _edge(remaining[i], remaining[j], arities):
                    edges.setdefault(i, set()).add(j)
        sccs = [
            comp
            for comp in _sccs(list(range(n)), edges)
            if len(comp) > 1 or comp[0] in edges.get(comp[0], set())
        ]
        if not sccs:
            return result
        to_remove: set[int] = set()
        progress = False
        for comp in sccs:
            scc = [remaining[i] for i in comp]
            handled = _subterm_criterion(scc)
            if handled is None:
                handled = _int_measure_processor(scc, session)
            if handled is None:
                handled = _size_interpretation_processor(scc, all_rules, sys, arities)
            if handled is None:
                result.status = "unknown"
                result.reason = f"cycle not oriented: {scc[0]!r}" + (
                    f" (+{len(scc) - 1} more pairs)" if len(scc) > 1 else ""
                )
                return result
            strict, measures = handled
            for name, m in measures.items():
                result.measures.setdefault(name, m)
            progress = True
            for i in comp:
                if remaining[i] in strict:
                    to_remove.add(i)
        if not progress or not to_remove:
            result.status = "unknown"
            result.reason = "no processor made progress"
            return result
        remaining = [dp for i, dp in enumerate(remaining) if i not in to_remove]
    result.status = "unknown"
    result.reason = "iteration limit reached"
    return result


def _topo_order(edges: dict[str, set[str]]) -> list[str]:
    nodes = sorted(set(edges) | {w for ws in edges.values() for w in ws})
    mark: dict[str, int] = {}
    out: list[str] = []

    def visit(v: str):
        if mark.get(v) == 2:
            return
        if mark.get(v) == 1:
            return  # cycle between symbols: order best-effort
        mark[v] = 1
        for w in sorted(edges.get(v, ())):
            visit(w)
        mark[v] = 2
        out.append(v)

    for v in nodes:
        visit(v)
    return list(reversed(out))


def fuzz_reductions(
    sys: RewriteSystem, qrules: list[Rule], trials: int = 50, steps: int = 200, seed: int = 3
) -> list[str]:
    """Soundness harness for a 'proved' verdict: bounded random reductions of
    R with Q must never revisit a state on one path (cycle detection)."""
    import random

    rng = random.Random(seed)
    sys_all = sys.with_extra_rules(list(qrules))
    problems = []
    seeds = _ground_seeds(list(sys.rules) + list(qrules), limit=trials)
    for seed_term in seeds[:trials]:
        current = seed_term
        path = {format_term(current)}
        for _ in range(steps):
            reducts = reduce_once(current, sys_all)
            if not reducts:
                break
            current = rng.choice(reducts).result
            key = format_term(current)
            if key in path:
                problems.append(f"cycle through {key}")
                break
            path.add(key)
        else:
            problems.append(f"no normal form from {format_term(seed_term)} within {steps} steps")
    return problems
