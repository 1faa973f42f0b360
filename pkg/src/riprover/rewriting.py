"""Constrained rules, rewrite systems, reduction and quasi-reductivity."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from .terms import (
    Arrow,
    EPSILON,
    FunctionSymbol,
    Position,
    Sort,
    Substitution,
    Term,
    TypeError_,
    Variable,
    app,
    apply_subst,
    fresh_variable,
    is_ground,
    match,
    positions,
    renaming_apart,
    replace_at,
    result_sort,
    subterm_at,
    type_args,
    unify,
    var_term,
    variables,
)
from .theory import (
    BOOL,
    THEORY_SORTS,
    TRUE_TERM,
    EvaluationError,
    conj,
    eq_int,
    evaluate,
    is_constraint,
    is_theory_term,
    is_value,
    value_term,
)


class SystemError_(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term
    constraint: Term = TRUE_TERM
    origin: str = "user"  # user | calc | hypothesis | q
    name: str = ""

    def __repr__(self):
        from .theory import format_term

        base = f"{format_term(self.lhs)} -> {format_term(self.rhs)}"
        if self.constraint != TRUE_TERM:
            base += f" [{format_term(self.constraint)}]"
        return base

    def all_variables(self) -> set[Variable]:
        return variables(self.lhs) | variables(self.rhs) | variables(self.constraint)


@dataclass(frozen=True)
class Axiom:
    lhs: Term
    rhs: Term
    constraint: Term = TRUE_TERM
    mode: str = "ground-confluent"  # ground-confluent | bounded-convertible
    name: str = ""


def check_rule(rule: Rule, allow_theory_lhs: bool = False):
    if rule.lhs.typ != rule.rhs.typ:
        raise SystemError_("type", f"rule {rule!r}: sides have different types")
    if isinstance(rule.lhs.head, Variable):
        raise SystemError_("shape", f"rule {rule!r}: left-hand side has a variable head")
    if not allow_theory_lhs and is_theory_term(rule.lhs):
        raise SystemError_(
            "theory-lhs", f"rule {rule!r}: left-hand side is a theory term (calculation rules are implicit)"
        )
    if not is_constraint(rule.constraint):
        raise SystemError_("constraint", f"rule {rule!r}: guard is not a constraint")
    allowed = variables(rule.lhs) | variables(rule.constraint)
    extra = variables(rule.rhs) - allowed
    if extra:
        names = ", ".join(sorted(v.name for v in extra))
        raise SystemError_("free-rhs-var", f"rule {rule!r}: rhs variables {names} unbound")


class RewriteSystem:
    """An LCSTRS: term-symbol signature plus user rules (theory is fixed)."""

    def __init__(
        self,
        symbols: dict[str, FunctionSymbol],
        rules: list[Rule],
        sorts: Optional[set[Sort]] = None,
        axioms: tuple[Axiom, ...] = (),
        trust: frozenset[str] = frozenset(),
    ):
        self.symbols = dict(symbols)
        self.rules = tuple(rules)
        self.sorts = set(sorts or set()) | THEORY_SORTS
        self.axioms = tuple(axioms)
        self.trust = frozenset(trust)
        for rule in self.rules:
            check_rule(rule, allow_theory_lhs=rule.origin in ("q", "hypothesis"))
        self._arity: dict[FunctionSymbol, Optional[int]] = {}
        self._index: dict[FunctionSymbol, list[Rule]] = {}
        self._build_tables()

    def _build_tables(self):
        self.defined: set[FunctionSymbol] = set()
        for rule in self.rules:
            head = rule.lhs.head
            assert isinstance(head, FunctionSymbol)
            self.defined.add(head)
            k = len(rule.lhs.args)
            prev = self._arity.get(head)
            if prev is not None and prev != k:
                raise SystemError_(
                    "arity-inconsistency",
                    f"symbol {head.name} heads rules with {prev} and {k} arguments",
                )
            if head.kind == "theory":
                m = len(type_args(head.typ))
                if k != m:
                    raise SystemError_(
                        "arity-inconsistency",
                        f"calculation symbol {head.name} has arity {m} but a rule with {k} arguments",
                    )
            self._arity[head] = k
            self._index.setdefault(head, []).append(rule)
        from .theory import CALC_SYMBOLS

        for sym in CALC_SYMBOLS:
            self._arity.setdefault(sym, len(type_args(sym.typ)))
        self.constructors = {
            s for s in self.symbols.values() if s.kind == "term" and s not in self.defined
        }

    def arity_of(self, sym: FunctionSymbol) -> Optional[int]:
        """Rule arity; None means infinity (constructors and values)."""
        if sym.is_value:
            return None
        if sym in self._arity:
            return self._arity[sym]
        if sym.kind == "theory":
            return len(type_args(sym.typ))
        return None  # constructor

    def rules_for(self, sym: FunctionSymbol) -> list[Rule]:
        return self._index.get(sym, [])

    def rule_named(self, name: str) -> Optional[Rule]:
        for rule in self.rules:
            if rule.name == name:
                return rule
        return None

    def is_defined(self, sym: FunctionSymbol) -> bool:
        return sym in self.defined

    def with_extra_rules(self, extra: list[Rule]) -> "RewriteSystem":
        return RewriteSystem(self.symbols, list(self.rules) + list(extra), self.sorts, self.axioms, self.trust)

    def constructors_for(self, typ) -> list[tuple[FunctionSymbol, int]]:
        """Symbols usable as gsc heads producing the given type, with the
        argument count that achieves it (constructors fully/partially applied,
        defined and calculation symbols strictly below their arity).  Value
        symbols are excluded: theory sorts are not structurally enumerable."""
        from .theory import CALC_SYMBOLS

        candidates = sorted(self.symbols.values(), key=lambda s: s.name)
        candidates += [s for s in CALC_SYMBOLS if s.name not in self.symbols]
        out = []
        for sym in candidates:
            if sym.is_value:
                continue
            args = type_args(sym.typ)
            ar = self.arity_of(sym)
            limit = len(args) if ar is None else min(ar - 1, len(args))
            for j in range(0, limit + 1):
                remaining = sym.typ
                for _ in range(j):
                    remaining = remaining.res  # type: ignore[union-attr]
                if remaining == typ:
                    out.append((sym, j))
        return out


# ---------------------------------------------------------------------------
# Calculation rules


def calc_result_constraint(y: Term, redex: Term) -> Term:
    """Constraint stating y equals the redex.  The fixed signature only has
    integer equality, so boolean results are equated structurally."""
    from .theory import AND, NOT, OR

    if redex.typ == BOOL:
        return app(OR, app(AND, y, redex), app(AND, app(NOT, y), app(NOT, redex)))
    return eq_int(y, redex)


def calc_rule_for(sym: FunctionSymbol) -> Rule:
    """The implicit rule f x1..xm -> y [y = f x1..xm] for a calculation symbol."""
    if sym.kind != "theory" or sym.is_value:
        raise SystemError_("value-symbol", f"{sym.name} is not a calculation symbol")
    args = type_args(sym.typ)
    xs = [var_term(fresh_variable(f"x{i+1}", t)) for i, t in enumerate(args)]
    y = var_term(fresh_variable("y", result_sort(sym.typ)))
    lhs = app(sym, *xs)
    return Rule(lhs, y, calc_result_constraint(y, lhs), origin="calc", name=f"calc-{sym.name}")


# ---------------------------------------------------------------------------
# Reduction


@dataclass(frozen=True)
class Reduct:
    position: Position
    rule: Rule
    subst: Substitution
    result: Term


class BudgetExceeded(Exception):
    pass


def _position_key(p: Position):
    return (p.path, p.star)


def _calc_step_at(t: Term, p: Position, u: Term) -> Optional[Reduct]:
    """Evaluate a ground, fully applied theory redex at position p of t."""
    sym = u.head
    if not isinstance(sym, FunctionSymbol) or sym.kind != "theory" or sym.is_value:
        return None
    if len(u.args) != len(type_args(sym.typ)):
        return None
    if not is_ground(u) or not is_theory_term(u):
        return None
    try:
        value = evaluate(u)
    except EvaluationError:
        return None
    rule = calc_rule_for(sym)
    binding = match(rule.lhs, u)
    assert binding is not None
    y = next(iter(variables(rule.rhs)))
    subst = binding.extend(y, value_term(value))
    return Reduct(p, rule, subst, replace_at(t, p, value_term(value)))


def reduce_once(t: Term, sys: RewriteSystem, session=None) -> list[Reduct]:
    """All single-step reducts of t, at every position (star positions too).

    Calculation steps instantiate the fresh result variable by evaluation.
    Constraint variables not bound by matching are instantiated from a solver
    model when a session is supplied, otherwise such rules are skipped.
    """
    out: list[Reduct] = []
    for p in sorted(positions(t), key=_position_key):
        u = subterm_at(t, p)
        for rule in sys.rules_for(u.head) if isinstance(u.head, FunctionSymbol) else []:
            sigma = _guard_respecting_match(rule, u, session)
            if sigma is None:
                continue
            out.append(Reduct(p, rule, sigma, replace_at(t, p, apply_subst(rule.rhs, sigma))))
        calc = _calc_step_at(t, p, u)
        if calc is not None:
            out.append(calc)
    return out


def _guard_respecting_match(rule: Rule, u: Term, session=None) -> Optional[Substitution]:
    """Match rule.lhs against u and complete the substitution so that it
    respects the guard (constraint variables mapped to values, guard true)."""
    sigma = match(rule.lhs, u)
    if sigma is None:
        return None
    extra = variables(rule.constraint) - sigma.domain()
    if extra:
        if session is None:
            return None
        partial = apply_subst(rule.constraint, sigma)
        if not is_constraint(partial):
            return None
        verdict = session.satisfiable(partial)
        if verdict.status != "sat" or verdict.model is None:
            return None
        for v in sorted(extra, key=lambda v: (v.name, v.vid)):
            image = verdict.model.get(v)
            sigma = sigma.extend(v, image if image is not None else value_term(0))
    for v in variables(rule.constraint):
        image = sigma.get(v)
        if image is None or not is_value(image):
            return None
    try:
        if evaluate(apply_subst(rule.constraint, sigma)) is not True:
            return None
    except EvaluationError:
        return None
    return sigma


def normalize(t: Term, sys: RewriteSystem, budget: int = 1_000_000) -> Term:
    """Some normal form, by an innermost-leftmost strategy.

    Deterministic given the rule order; raises BudgetExceeded when the step
    budget runs out (the paper world only assumes weak normalization)."""
    remaining = [budget]

    def spend():
        remaining[0] -= 1
        if remaining[0] < 0:
            raise BudgetExceeded(f"no normal form within {budget} steps")

    def root_step(u: Term) -> Optional[Term]:
        # try prefixes left to right (shortest partial application first)
        for j in range(len(u.args) + 1):
            prefix = Term(u.head, u.args[:j])
            rest = u.args[j:]
            if isinstance(prefix.head, FunctionSymbol):
                for rule in sys.rules_for(prefix.head):
                    sigma = match(rule.lhs, prefix)
                    if sigma is None:
                        continue
                    if variables(rule.constraint) - sigma.domain():
                        continue
                    phi = apply_subst(rule.constraint, sigma)
                    if not is_ground(phi):
                        continue
                    ok = all(
                        (img := sigma.get(v)) is not None and is_value(img)
                        for v in variables(rule.constraint)
                    )
                    if not ok:
                        continue
                    try:
                        if evaluate(phi) is not True:
                            continue
                    except EvaluationError:
                        continue
                    rhs = apply_subst(rule.rhs, sigma)
                    return Term(rhs.head, rhs.args + tuple(rest))
                sym = prefix.head
                if (
                    sym.kind == "theory"
                    and not sym.is_value
                    and len(prefix.args) == len(type_args(sym.typ))
                    and is_ground(prefix)
                    and is_theory_term(prefix)
                ):
                    value = value_term(evaluate(prefix))
                    return Term(value.head, value.args + tuple(rest))
        return None

    def norm(u: Term) -> Term:
        u = Term(u.head, tuple(norm(a) for a in u.args))
        while True:
            stepped = root_step(u)
            if stepped is None:
                return u
            spend()
            u = Term(stepped.head, tuple(norm(a) for a in stepped.args))

    return norm(t)


# ---------------------------------------------------------------------------
# Semi-constructor terms


def is_semi_constructor(t: Term, sys: RewriteSystem) -> bool:
    """Variables, and partial applications below each symbol's rule arity."""
    if t.is_var:
        return True
    if isinstance(t.head, Variable):
        return False
    ar = sys.arity_of(t.head)
    if ar is not None and len(t.args) >= ar:
        return False
    return all(is_semi_constructor(a, sys) for a in t.args)


# ---------------------------------------------------------------------------
# Quasi-reductivity (sufficient finite-depth pattern-cover check)


@dataclass(frozen=True)
class QuasiReductivityResult:
    status: str  # proved | refuted | unknown
    detail: str = ""
    witness: tuple[Term, ...] = ()


def _pattern_depth(t: Term) -> int:
    if t.is_var:
        return 0
    return 1 + max((_pattern_depth(a) for a in t.args), default=0)


def _sct_patterns(sys: RewriteSystem, typ, depth: int, counter) -> list[Term]:
    """Linear semi-constructor patterns of the given type, refined to the
    given nesting depth.  At each refined position the produced patterns
    partition the ground semi-constructor terms of that type.  Theory sorts
    are never refined structurally (they stand for values)."""
    if typ in THEORY_SORTS or depth == 0:
        return [var_term(fresh_variable(f"p{next(counter)}", typ))]
    out: list[Term] = []
    for sym, j in sys.constructors_for(typ):
        arg_types = type_args(sym.typ)[:j]
        arg_choices = [_sct_patterns(sys, at, depth - 1, counter) for at in arg_types]
        for combo in itertools.product(*arg_choices):
            out.append(app(sym, *combo))
    return out


def _unify_tuples(lefts: tuple[Term, ...], rights: tuple[Term, ...]) -> Optional[Substitution]:
    sigma = Substitution()
    for a, b in zip(lefts, rights):
        sub = unify(apply_subst(a, sigma), apply_subst(b, sigma))
        if sub is None:
            return None
        sigma = sigma.compose(sub)
    return sigma


def check_quasi_reductivity(sys: RewriteSystem, session, max_depth: int = 4) -> QuasiReductivityResult:
    """Sufficient check: every ground semi-constructor argument pattern of
    each defined symbol must be covered by some rule whose instantiated
    guards are, in disjunction, SMT-valid on that pattern class."""
    from .theory import OR as OR_SYM, format_term

    counter = itertools.count(1)
    for f in sorted(sys.defined, key=lambda s: s.name):
        if f.kind == "theory":
            continue  # the implicit calculation rule always applies
        rules = sys.rules_for(f)
        k = sys.arity_of(f) or 0
        needed = [0] * k
        for rule in rules:
            for i, arg in enumerate(rule.lhs.args):
                needed[i] = max(needed[i], _pattern_depth(arg))
        if any(d > max_depth for d in needed):
            return QuasiReductivityResult(
                "unknown", f"{f.name}: pattern depth {max(needed)} exceeds limit {max_depth}"
            )
        arg_types = type_args(f.typ)[:k]
        per_position = [
            _sct_patterns(sys, arg_types[i], needed[i], counter) for i in range(k)
        ]
        for combo in itertools.product(*per_position):
            disjuncts: list[Term] = []
            approximate = False
            pattern_vars = set()
            for p in combo:
                pattern_vars |= variables(p)
            for rule in rules:
                renaming = renaming_apart(rule.all_variables(), pattern_vars)
                lhs_args = tuple(apply_subst(a, renaming) for a in rule.lhs.args)
                phi = apply_subst(rule.constraint, renaming)
                sigma = _unify_tuples(lhs_args, combo)
                if sigma is None:
                    continue
                eqs: list[Term] = []
                exact = True
                for v in sorted(pattern_vars, key=lambda v: (v.name, v.vid)):
                    image = sigma.get(v)
                    if image is None:
                        continue
                    if v.typ in THEORY_SORTS:
                        if is_value(image) or (image.is_var and image.head in pattern_vars):
                            eqs.append(
                                calc_result_constraint(var_term(v), image)
                                if v.typ == BOOL
                                else eq_int(var_term(v), image)
                            )
                        elif image.is_var:
                            continue  # bound to a fresh rule variable: unconstrained
                        else:
                            exact = False
                    else:
                        # a term-sorted pattern variable forced to a shape we
                        # cannot express as a constraint: only partial coverage
                        if not (image.is_var and image.head not in pattern_vars):
                            exact = False
                if not exact:
                    approximate = True
                    continue
                disjunct = conj(apply_subst(phi, sigma), *eqs)
                if not is_constraint(disjunct):
                    approximate = True
                    continue
                disjuncts.append(disjunct)
            if not disjuncts:
                if approximate:
                    return QuasiReductivityResult(
                        "unknown", f"{f.name}: cannot decide coverage of pattern", combo
                    )
                return QuasiReductivityResult(
                    "refuted",
                    f"{f.name} {' '.join(format_term(p, 11) for p in combo)} has no applicable rule",
                    combo,
                )
            formula = disjuncts[0]
            for d in disjuncts[1:]:
                formula = app(OR_SYM, formula, d)
            verdict = session.valid(formula)
            if verdict.status == "valid":
                continue
            if verdict.status == "invalid" and not approximate:
                model = verdict.model
                shown = " ".join(format_term(p, 11) for p in combo)
                return QuasiReductivityResult(
                    "refuted", f"{f.name} {shown}: guards do not cover (countermodel {model!r})", combo
                )
            return QuasiReductivityResult(
                "unknown", f"{f.name}: guard coverage undecided for a pattern class", combo
            )
    return QuasiReductivityResult("proved")


def rename_apart(obj, avoid: set):
    """A fresh-variable copy of a rule or equation, variable-disjoint from
    ``avoid``; works for anything with lhs/rhs/constraint fields."""
    from dataclasses import replace as _replace

    vars_ = variables(obj.lhs) | variables(obj.rhs) | variables(obj.constraint)
    rho = renaming_apart(vars_, avoid)
    return _replace(
        obj,
        lhs=apply_subst(obj.lhs, rho),
        rhs=apply_subst(obj.rhs, rho),
        constraint=apply_subst(obj.constraint, rho),
    )
