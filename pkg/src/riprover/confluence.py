"""Overlaps, critical peaks, and the ground-confluence goal driver."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from .engine import TAG_STEP, EquationContext
from .rewriting import BudgetExceeded, RewriteSystem, Rule, calc_rule_for, normalize, reduce_once
from .smt import SmtSession
from .terms import (
    EPSILON,
    FunctionSymbol,
    Position,
    Substitution,
    Term,
    Variable,
    app,
    apply_subst,
    is_ground,
    match,
    positions,
    renaming_apart,
    replace_at,
    subterm_at,
    type_args,
    unify,
    var_term,
    variables,
)
from .theory import (
    AND,
    CALC_SYMBOLS,
    THEORY_SORTS,
    TRUE_TERM,
    EvaluationError,
    conj,
    conjuncts,
    evaluate,
    format_term,
    is_value,
    value_term,
)


@dataclass(frozen=True)
class Overlap:
    rule1: Rule
    rule2: Rule
    position: Position
    mgu: Substitution


@dataclass(frozen=True)
class CriticalPeak:
    source: Term
    left: Term
    right: Term
    constraint: Term

    def __repr__(self):
        phi = "" if self.constraint == TRUE_TERM else f" [{format_term(self.constraint)}]"
        return (
            f"<{format_term(self.source)}, {format_term(self.left)}, "
            f"{format_term(self.right)}>{phi}"
        )


def _peak_key(peak: CriticalPeak) -> str:
    """Canonical rendering modulo variable renaming and reduct swapping."""
    names: dict[Variable, str] = {}

    def canon(t: Term) -> str:
        if isinstance(t.head, Variable):
            key = names.setdefault(t.head, f"_{len(names)}")
        else:
            key = t.head.name
        if not t.args:
            return key
        return "(" + " ".join([key] + [canon(a) for a in t.args]) + ")"

    def raw(t: Term) -> str:
        return format_term(t)

    first, second = sorted((peak.left, peak.right), key=raw)
    source = canon(peak.source)
    a, b = canon(first), canon(second)
    cs = sorted(canon(c) for c in conjuncts(peak.constraint))
    return f"{source} | {a} ~ {b} | {' & '.join(cs)}"


def _trivial(peak: CriticalPeak, session: SmtSession) -> bool:
    """Peaks whose reducts the constraint forces equal (e.g. self-overlaps of
    calculation rules) are dropped: they are closed by one eq-delete."""
    if peak.left == peak.right:
        return True
    sigma = unify(peak.left, peak.right)
    if sigma is None:
        return False
    from .rewriting import calc_result_constraint
    from .smt import implies_valid

    eqs = []
    for v, u in sigma.items():
        if not (u.is_var or is_value(u)) or v.typ not in THEORY_SORTS:
            return False
    for v, u in sigma.items():
        eqs.append(calc_result_constraint(var_term(v), u))
    return implies_valid(session, peak.constraint, conj(*eqs)).status == "valid"


def _rule_pool(sys: RewriteSystem) -> list[Rule]:
    pool = list(sys.rules)
    for sym in CALC_SYMBOLS:
        pool.append(calc_rule_for(sym))
    return pool


def critical_peaks(sys: RewriteSystem, session: SmtSession) -> list[CriticalPeak]:
    """All critical peaks, deduplicated modulo renaming and swapped reducts;
    constraint-unsatisfiable overlaps and trivially-equal reducts excluded."""
    pool = _rule_pool(sys)
    peaks: dict[str, CriticalPeak] = {}
    for idx2, rho2 in enumerate(pool):
        vars2 = rho2.all_variables()
        for p in sorted(positions(rho2.lhs), key=lambda p: (p.path, p.star)):
            sub = subterm_at(rho2.lhs, p)
            if sub.is_var:
                continue
            for idx1, base1 in enumerate(pool):
                renaming = renaming_apart(base1.all_variables(), vars2)
                l1 = apply_subst(base1.lhs, renaming)
                r1 = apply_subst(base1.rhs, renaming)
                phi1 = apply_subst(base1.constraint, renaming)
                if l1.typ != sub.typ:
                    continue
                sigma = unify(l1, sub)
                if sigma is None:
                    continue
                guard_vars = variables(phi1) | variables(rho2.constraint)
                if any(
                    (img := sigma.get(v)) is not None and not (img.is_var or is_value(img))
                    for v in guard_vars
                ):
                    continue
                if p == EPSILON and idx1 == idx2:
                    if not (variables(r1) - variables(l1)):
                        continue
                constraint = conj(
                    apply_subst(phi1, sigma), apply_subst(rho2.constraint, sigma)
                )
                verdict = session.satisfiable(constraint)
                if verdict.status != "sat":
                    continue
                peak = CriticalPeak(
                    apply_subst(rho2.lhs, sigma),
                    apply_subst(replace_at(rho2.lhs, p, r1), sigma),
                    apply_subst(rho2.rhs, sigma),
                    constraint,
                )
                if _trivial(peak, session):
                    continue
                key = _peak_key(peak)
                peaks.setdefault(key, peak)
    return [peaks[k] for k in sorted(peaks)]


def ground_confluence_goals(peaks: list[CriticalPeak]) -> list[EquationContext]:
    """One equation context per peak, both bounds set to the peak source.

    The source single-steps to each reduct, so the contexts are strongly
    bounded with certified strict domination on both sides."""
    out = []
    for i, peak in enumerate(peaks, start=1):
        out.append(
            EquationContext(
                i,
                peak.source,
                peak.left,
                peak.right,
                peak.source,
                peak.constraint,
                TAG_STEP,
                TAG_STEP,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Random joinability sampling (the Critical Peak Lemma as a test oracle)


@dataclass
class JoinabilityReport:
    trials: int = 0
    local_peaks: int = 0
    joined: int = 0
    peak_instances: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _random_term(
    sys: RewriteSystem, typ, rng: random.Random, depth: int
) -> Optional[Term]:
    if typ in THEORY_SORTS:
        from .theory import BOOL

        if typ == BOOL:
            return value_term(rng.choice([True, False]))
        return value_term(rng.randint(-5, 5))
    candidates: list[tuple[FunctionSymbol, int]] = []
    for sym in sorted(sys.symbols.values(), key=lambda s: s.name):
        args = type_args(sym.typ)
        for j in range(len(args) + 1):
            remaining = sym.typ
            for _ in range(j):
                remaining = remaining.res  # type: ignore[union-attr]
            if remaining == typ:
                candidates.append((sym, j))
    if not candidates:
        return None
    leafish = [(s, j) for s, j in candidates if j == 0]
    if depth <= 0 and leafish:
        candidates = leafish
    sym, j = rng.choice(candidates)
    args = []
    for at in type_args(sym.typ)[:j]:
        sub = _random_term(sys, at, rng, depth - 1)
        if sub is None:
            return None
        args.append(sub)
    return app(sym, *args)


def _embeds_peak(
    t: Term, t1: Term, t2: Term, peaks: list[CriticalPeak]
) -> bool:
    for peak in peaks:
        for p in positions(t):
            u = subterm_at(t, p)
            sigma = match(peak.source, u)
            if sigma is None or not sigma.is_ground():
                continue
            try:
                if evaluate(apply_subst(peak.constraint, sigma)) is not True:
                    continue
            except EvaluationError:
                continue
            left = replace_at(t, p, apply_subst(peak.left, sigma))
            right = replace_at(t, p, apply_subst(peak.right, sigma))
            if (left, right) in ((t1, t2), (t2, t1)):
                return True
    return False


def sample_joinability(
    sys: RewriteSystem,
    session: SmtSession,
    trials: int = 200,
    depth: int = 4,
    seed: int = 2024,
    join_budget: int = 4000,
) -> JoinabilityReport:
    """Randomly sample local peaks; every non-joinable one must be an
    instance of a computed critical peak (empirical Critical Peak Lemma)."""
    rng = random.Random(seed)
    peaks = critical_peaks(sys, session)
    report = JoinabilityReport()
    sorts = sorted(
        {s for s in sys.sorts if s not in THEORY_SORTS}, key=lambda s: s.name
    ) or [next(iter(THEORY_SORTS))]
    from .theory import INT

    target_sorts = sorts + [INT]
    for k in range(trials):
        typ = target_sorts[k % len(target_sorts)]
        t = _random_term(sys, typ, rng, depth)
        if t is None or not is_ground(t):
            continue
        report.trials += 1
        reducts = reduce_once(t, sys)
        for a, b in itertools.combinations(reducts, 2):
            if a.result == b.result:
                continue
            report.local_peaks += 1
            try:
                na = normalize(a.result, sys, join_budget)
                nb = normalize(b.result, sys, join_budget)
            except BudgetExceeded:
                report.violations.append(f"budget exhausted joining reducts of {format_term(t)}")
                continue
            if na == nb:
                report.joined += 1
            elif _embeds_peak(t, a.result, b.result, peaks):
                report.peak_instances += 1
            else:
                report.violations.append(
                    f"non-joinable local peak at {format_term(t)} is no critical-peak instance"
                )
    return report


def export_peaks(peaks: list[CriticalPeak]) -> str:
    """Peaks as equations in the system file format (for external tools)."""
    lines = []
    for peak in peaks:
        base = f"{format_term(peak.left)} == {format_term(peak.right)}"
        if peak.constraint != TRUE_TERM:
            base += f" [{format_term(peak.constraint)}]"
        lines.append(base + ";")
    return "\n".join(lines) + ("\n" if lines else "")
