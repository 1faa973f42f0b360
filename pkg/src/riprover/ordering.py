"""Bounding-pair requirement ledger and syntactic ordering discharge.

The committed bounding pair is the one from the reduction-ordering strategy:
``gt`` is (->_{R union Q} union strict-subterm)+ and ``ge`` its reflexive
closure, where Q abstracts the requirements that are still pending.  Under
that commitment a requirement can be discharged syntactically by exhibiting
a chain of rewrite steps and strict subterm steps; whatever remains pending
is later handed to the termination oracle as the rule set Q.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .rewriting import RewriteSystem, Rule, calc_result_constraint
from .smt import SmtSession, entails_under, implies_valid
from .terms import (
    FunctionSymbol,
    Position,
    Substitution,
    Term,
    Variable,
    app,
    apply_subst,
    arrow,
    fresh_variable,
    is_ground,
    match,
    positions,
    renaming_apart,
    result_sort,
    subterm_at,
    replace_at,
    type_args,
    var_term,
    variables,
)
from .theory import (
    THEORY_SORTS,
    TRUE_TERM,
    EvaluationError,
    conjuncts,
    evaluate,
    format_term,
    is_theory_term,
    is_value,
    value_term,
)


@dataclass(frozen=True)
class BoundingRequirement:
    left: Optional[Term]  # None encodes the infinity marker
    right: Term
    constraint: Term
    strict: bool
    status: str = "pending"  # discharged-syntactic | pending | proved | trusted | failed
    origin: str = ""
    witness: str = ""

    def __repr__(self):
        rel = ">" if self.strict else ">="
        left = "•" if self.left is None else format_term(self.left)
        out = f"{left} {rel} {format_term(self.right)}"
        if self.constraint != TRUE_TERM:
            out += f" [{format_term(self.constraint)}]"
        return f"{out}  ({self.status})"


def _canonical(req: BoundingRequirement) -> str:
    """Alpha-canonical rendering used for deduplication modulo renaming."""
    names: dict[Variable, str] = {}

    def canon(t: Optional[Term]) -> str:
        if t is None:
            return "•"
        if isinstance(t.head, Variable):
            key = names.setdefault(t.head, f"_{len(names)}")
        else:
            key = t.head.name
        if not t.args:
            return key
        return "(" + " ".join([key] + [canon(a) for a in t.args]) + ")"

    rel = ">" if req.strict else ">="
    return f"{canon(req.left)} {rel} {canon(req.right)} [{canon(req.constraint)}]"


@dataclass(frozen=True)
class RequirementLedger:
    items: tuple[BoundingRequirement, ...] = ()
    bridges: tuple[tuple[str, str, str], ...] = ()  # (from-type, to-sort, symbol name)

    def add(self, req: BoundingRequirement) -> tuple["RequirementLedger", int]:
        """Appends a requirement, reusing an alpha-equal existing entry."""
        key = _canonical(req)
        for i, existing in enumerate(self.items):
            if _canonical(existing) == key:
                return self, i
        return RequirementLedger(self.items + (req,), self.bridges), len(self.items)

    def set_status(self, index: int, status: str, witness: str = "") -> "RequirementLedger":
        items = list(self.items)
        items[index] = replace(items[index], status=status, witness=witness or items[index].witness)
        return RequirementLedger(tuple(items), self.bridges)

    def pending(self) -> list[tuple[int, BoundingRequirement]]:
        return [(i, r) for i, r in enumerate(self.items) if r.status == "pending"]

    def all_green(self) -> bool:
        return all(r.status in ("discharged-syntactic", "proved", "trusted") for r in self.items)

    def summary(self) -> list[str]:
        return [f"REQ{i + 1}: {r!r}" for i, r in enumerate(self.items)]


# ---------------------------------------------------------------------------
# The baseline relation: chains of ->_{R u Q u calc} and strict subterm steps


class _Search:
    def __init__(self, sys, session, psi, qrules, node_budget):
        self.sys = sys
        self.session = session
        self.psi = psi
        self.qrules = qrules
        self.node_budget = node_budget
        self._calc_cache: dict[str, list[Term]] = {}

    def calc_targets(self, u: Term) -> list[Term]:
        """Terms a theory subterm may step to: its value, or a variable of
        the ambient constraint that the constraint forces equal to it."""
        key = format_term(u)
        if key in self._calc_cache:
            return self._calc_cache[key]
        out: list[Term] = []
        if is_ground(u):
            try:
                out.append(value_term(evaluate(u)))
            except EvaluationError:
                pass
        else:
            psi_vars = sorted(variables(self.psi), key=lambda v: (v.name, v.vid))
            for v in psi_vars:
                if v.typ != u.typ:
                    continue
                eq = calc_result_constraint(var_term(v), u)
                if implies_valid(self.session, self.psi, eq).status == "valid":
                    out.append(var_term(v))
        self._calc_cache[key] = out
        return out

    def successors(self, t: Term) -> list[tuple[Term, str]]:
        out: list[tuple[Term, str]] = []
        for p in sorted(positions(t), key=lambda p: (p.path, p.star)):
            u = subterm_at(t, p)
            if p != Position((), 0):
                out.append((u, f"subterm at {p!r}"))
            if isinstance(u.head, FunctionSymbol):
                for rule in self.sys.rules_for(u.head) + [
                    q for q in self.qrules if q.lhs.head == u.head
                ]:
                    sigma = match(rule.lhs, u)
                    if sigma is None:
                        continue
                    # complete constraint variables: identity for ambient ones
                    extra = variables(rule.constraint) - sigma.domain()
                    psi_vars = variables(self.psi)
                    ok = True
                    for v in sorted(extra, key=lambda v: (v.name, v.vid)):
                        if v in psi_vars:
                            sigma = sigma.extend(v, var_term(v))
                        else:
                            ok = False
                            break
                    if not ok:
                        continue
                    if not entails_under(self.session, self.psi, sigma, rule.constraint):
                        continue
                    out.append(
                        (replace_at(t, p, apply_subst(rule.rhs, sigma)), f"rule {rule.name or rule.origin} at {p!r}")
                    )
                sym = u.head
                if sym.kind == "theory" and not sym.is_value and len(u.args) == len(type_args(sym.typ)):
                    if is_theory_term(u):
                        for target in self.calc_targets(u):
                            if target != u:
                                out.append((replace_at(t, p, target), f"calc at {p!r}"))
        return out


def baseline_geq(
    s: Term,
    t: Term,
    psi: Term,
    sys: RewriteSystem,
    session: SmtSession,
    qrules: list[Rule] = (),
    strict: bool = False,
    budget: int = 600,
) -> Optional[list[str]]:
    """A witness chain s (->_{R u Q} u subterm)* t, or None.

    Without ``strict`` the empty chain witnesses s >= s.  Budget exhaustion
    returns None, which is the sound direction."""
    if not strict and s == t:
        return []
    search = _Search(sys, session, psi, list(qrules), budget)
    seen = {format_term(s)}
    frontier: list[tuple[Term, list[str]]] = [(s, [])]
    nodes = 0
    while frontier:
        new_frontier: list[tuple[Term, list[str]]] = []
        for term, path in frontier:
            for succ, label in search.successors(term):
                key = format_term(succ)
                if key in seen:
                    continue
                seen.add(key)
                nodes += 1
                if nodes > budget:
                    return None
                new_path = path + [label]
                if succ == t:
                    return new_path
                if len(new_path) < 12:
                    new_frontier.append((succ, new_path))
        frontier = new_frontier
    return None


# ---------------------------------------------------------------------------
# Discharging


def discharge(
    req: BoundingRequirement,
    sys: RewriteSystem,
    session: SmtSession,
    qrules: list[Rule] = (),
    flag_hint: Optional[str] = None,
) -> BoundingRequirement:
    """Attempt syntactic discharge of a requirement.

    flag_hint carries strong-bound bookkeeping from the engine: when the
    caller already certified ``left > right`` the check is skipped."""
    if req.left is None:
        return replace(req, status="discharged-syntactic", witness="infinite bound")
    if req.left == req.right:
        if not req.strict:
            return replace(req, status="discharged-syntactic", witness="reflexivity")
        verdict = session.satisfiable(req.constraint)
        if verdict.status == "unsat":
            return replace(req, status="discharged-syntactic", witness="unsatisfiable constraint")
        return replace(req, status="failed", witness="strict comparison of equal terms")
    if flag_hint:
        return replace(req, status="discharged-syntactic", witness=flag_hint)
    chain = baseline_geq(
        req.left, req.right, req.constraint, sys, session, qrules, strict=req.strict
    )
    if chain is not None:
        return replace(req, status="discharged-syntactic", witness="; ".join(chain) or "reflexivity")
    return req  # stays pending


# ---------------------------------------------------------------------------
# Size-2 multiset comparison


def mul_compare(
    pair1: tuple[Optional[Term], Optional[Term]],
    pair2: tuple[Term, Term],
    psi: Term,
    strict: bool,
) -> list[list[BoundingRequirement]]:
    """The disjunctive cases of the size-2 multiset extension: each returned
    alternative is a list of requirements that together justify the
    comparison.  The caller picks one alternative and discharges it."""
    a1, a2 = pair1
    b1, b2 = pair2

    def req(left, right, is_strict):
        return BoundingRequirement(left, right, psi, is_strict)

    alts: list[list[BoundingRequirement]] = []
    for a in (a1, a2):
        alts.append([req(a, b1, True), req(a, b2, True)])
    if strict:
        for a_strict, a_weak in ((a1, a2), (a2, a1)):
            for b_strict, b_weak in ((b1, b2), (b2, b1)):
                alts.append([req(a_strict, b_strict, True), req(a_weak, b_weak, False)])
    else:
        alts.append([req(a1, b1, False), req(a2, b2, False)])
        alts.append([req(a1, b2, False), req(a2, b1, False)])
    seen = set()
    unique = []
    for alt in alts:
        key = tuple(sorted(_canonical(r) for r in alt))
        if key not in seen:
            seen.add(key)
            unique.append(alt)
    return unique


def mul_holds(
    pair1,
    pair2,
    psi,
    strict,
    sys: RewriteSystem,
    session: SmtSession,
    qrules: list[Rule] = (),
) -> bool:
    """True when some alternative of the multiset comparison discharges."""
    for alt in mul_compare(pair1, pair2, psi, strict):
        if all(
            discharge(r, sys, session, qrules).status == "discharged-syntactic" for r in alt
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# Abstraction of pending requirements into Q rules


@dataclass(frozen=True)
class AbstractionResult:
    rule: Optional[Rule]
    reason: str = ""
    ledger: Optional[RequirementLedger] = None


def _has_applied_variable(t: Term) -> bool:
    if isinstance(t.head, Variable) and t.args:
        return True
    return any(_has_applied_variable(a) for a in t.args)


def abstract_to_rule(
    req: BoundingRequirement, index: int, ledger: RequirementLedger
) -> AbstractionResult:
    """Turn a pending requirement into a rewrite rule whose orientation
    implies it under (->_{R u Q} u subterm)+.

    Left-hand-side arguments containing applied variables are generalized to
    fresh variables when their variables are not needed elsewhere; a type
    mismatch between the sides is bridged by a generated constructor."""
    if req.left is None:
        return AbstractionResult(None, "infinite bound needs no rule")
    lhs, rhs, phi = req.left, req.right, req.constraint
    if isinstance(lhs.head, Variable):
        return AbstractionResult(None, "not-abstractable: variable-headed left side")
    new_args = []
    generalized: set[Variable] = set()
    for arg in lhs.args:
        if _has_applied_variable(arg):
            if variables(arg) & variables(rhs):
                return AbstractionResult(
                    None, "not-abstractable: applied variable shared with right side"
                )
            generalized |= variables(arg)
            new_args.append(var_term(fresh_variable("z", arg.typ)))
        else:
            new_args.append(arg)
    lhs = Term(lhs.head, tuple(new_args))
    if generalized:
        # weakening the guard is sound: the rule only fires more often
        from .theory import conj

        kept = [c for c in conjuncts(phi) if not (variables(c) & generalized)]
        phi = conj(*kept)
    bridges = dict(((f, t), n) for f, t, n in ledger.bridges)
    new_ledger = ledger
    if lhs.typ != rhs.typ:
        from .terms import format_type

        key = (format_type(rhs.typ), format_type(lhs.typ))
        if key in bridges:
            name = bridges[key]
        else:
            name = f"cast{len(bridges) + 1}"
            new_ledger = RequirementLedger(
                ledger.items, ledger.bridges + ((key[0], key[1], name),)
            )
        bridge_sym = FunctionSymbol(name, arrow(rhs.typ, lhs.typ), "term")
        rhs = app(bridge_sym, rhs)
    # a rule needs Var(rhs) within Var(lhs) u Var(phi)
    missing = variables(rhs) - variables(lhs) - variables(phi)
    if any(v.typ not in THEORY_SORTS for v in missing):
        return AbstractionResult(None, "not-abstractable: free term-sorted right-side variable")
    for v in sorted(missing, key=lambda v: (v.name, v.vid)):
        from .theory import conj, eq_int

        phi = conj(phi, eq_int(var_term(v), var_term(v)))
    rule = Rule(lhs, rhs, phi, origin="q", name=f"Q{index + 1}")
    return AbstractionResult(rule, "", new_ledger)


def q_rules(ledger: RequirementLedger) -> tuple[list[Rule], RequirementLedger, list[str]]:
    """Abstract every pending or proved requirement into Q."""
    rules: list[Rule] = []
    problems: list[str] = []
    for i, req in enumerate(ledger.items):
        if req.status in ("pending", "proved", "trusted"):
            result = abstract_to_rule(req, i, ledger)
            if result.ledger is not None:
                ledger = result.ledger
            if result.rule is not None:
                rules.append(result.rule)
            elif req.status == "pending":
                problems.append(f"REQ{i + 1}: {result.reason}")
    return rules, ledger, problems
