"""Equation contexts, proof states, and the deduction rules.

The engine operates in strongly-bounded mode: every side of every context
carries a justification tag showing it is equal to its bounding term or
strictly below it, so most ordering side conditions reduce to tag lookups
plus strict-subterm reasoning.  Whatever cannot be discharged syntactically
is recorded in the requirement ledger and later handed to the termination
oracle as rules.

All operations are pure functions from proof state to proof state (or a
refutation); the session layer owns transcripts, undo and trust flags.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .ordering import (
    BoundingRequirement,
    RequirementLedger,
    abstract_to_rule,
    baseline_geq,
    discharge,
    q_rules,
)
from .rewriting import (
    RewriteSystem,
    Rule,
    calc_result_constraint,
    is_semi_constructor,
)
from .smt import SmtSession, entails_under, implies_valid
from .terms import (
    EPSILON,
    FunctionSymbol,
    Position,
    Substitution,
    Term,
    Variable,
    app,
    apply_subst,
    fresh_variable,
    match,
    positions,
    rename_name,
    renaming_apart,
    replace_at,
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
    conj,
    conjuncts,
    eq_int,
    format_term,
    is_constraint,
    is_theory_term,
    is_value,
    value_term,
)


class RuleError(Exception):
    """A deduction rule's precondition failed."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    constraint: Term = TRUE_TERM

    def __repr__(self):
        base = f"{format_term(self.lhs)} == {format_term(self.rhs)}"
        if self.constraint != TRUE_TERM:
            base += f" [{format_term(self.constraint)}]"
        return base

    def all_variables(self) -> set[Variable]:
        return variables(self.lhs) | variables(self.rhs) | variables(self.constraint)


# Justification tags for the strong-boundedness flags.
TAG_BULLET = "bullet"
TAG_EQUAL = "equal"
TAG_STEP = "step"  # certified bound > side via rewrite/subterm steps
TAG_REQ = "requirement"  # backed by a ledger entry


@dataclass(frozen=True)
class EquationContext:
    cid: int
    left_bound: Optional[Term]  # None encodes the infinity marker
    lhs: Term
    rhs: Term
    right_bound: Optional[Term]
    constraint: Term
    tag_left: str = TAG_BULLET
    tag_right: str = TAG_BULLET

    def __repr__(self):
        return self.render(full=True)

    def render(self, full: bool = False) -> str:
        core = f"{format_term(self.lhs)} == {format_term(self.rhs)}"
        if self.constraint != TRUE_TERM:
            core += f" [{format_term(self.constraint)}]"
        if full:
            lb = "•" if self.left_bound is None else format_term(self.left_bound)
            rb = "•" if self.right_bound is None else format_term(self.right_bound)
            return f"<{lb}> {core} <{rb}>"
        marks = ""
        if self.left_bound is not None and self.left_bound == self.lhs:
            marks += " ⊙L"
        if self.right_bound is not None and self.right_bound == self.rhs:
            marks += " ⊙R"
        return core + marks

    def equation(self) -> Equation:
        return Equation(self.lhs, self.rhs, self.constraint)

    def all_variables(self) -> set[Variable]:
        out = variables(self.lhs) | variables(self.rhs) | variables(self.constraint)
        if self.left_bound is not None:
            out |= variables(self.left_bound)
        if self.right_bound is not None:
            out |= variables(self.right_bound)
        return out


@dataclass(frozen=True)
class ProofState:
    contexts: tuple[EquationContext, ...] = ()
    hypotheses: tuple[Equation, ...] = ()
    ledger: RequirementLedger = field(default_factory=RequirementLedger)
    complete: bool = True
    complete_snapshots: tuple[frozenset, ...] = ()
    next_cid: int = 1

    def context(self, cid: int) -> EquationContext:
        for ctx in self.contexts:
            if ctx.cid == cid:
                return ctx
        raise RuleError("bad-selector", f"no equation context {cid}")

    def cids(self) -> frozenset:
        return frozenset(ctx.cid for ctx in self.contexts)

    def is_qed(self) -> bool:
        return not self.contexts


@dataclass(frozen=True)
class Refuted:
    """The outcome of (Disprove): the goal set contains a non-theorem."""

    equation: Equation
    model: Substitution
    instantiation: Optional[Substitution] = None
    detail: str = ""


DeductionOutcome = Union[ProofState, Refuted]

# Rules with the Completeness Property (Semi-constructor only for symbol heads,
# handled at the call site).
_COMPLETE_RULES = {
    "simplify",
    "case",
    "delete",
    "induct",
    "hypothesis",
    "alter",
    "hdelete",
    "eq-delete",
    "calc",
    "semiconstructor",
}


class Engine:
    """Pure state-transition functions over proof states.

    One instance per loaded system; holds no proof state of its own."""

    def __init__(self, sys: RewriteSystem, session: SmtSession, prereqs=None):
        self.sys = sys
        self.session = session
        self.prereqs = prereqs
        self.warnings: list[str] = []

    # -- plumbing ----------------------------------------------------------

    def warn(self, message: str):
        self.warnings.append(message)

    def _advance(
        self,
        state: ProofState,
        removed_cid: Optional[int],
        added: list[EquationContext],
        rule: str,
        complete_preserved: bool,
        ledger: Optional[RequirementLedger] = None,
        hypotheses: Optional[tuple[Equation, ...]] = None,
    ) -> ProofState:
        contexts = tuple(c for c in state.contexts if c.cid != removed_cid) + tuple(added)
        complete = state.complete and complete_preserved
        snapshots = state.complete_snapshots
        new = ProofState(
            contexts=contexts,
            hypotheses=hypotheses if hypotheses is not None else state.hypotheses,
            ledger=ledger if ledger is not None else state.ledger,
            complete=complete,
            complete_snapshots=snapshots,
            next_cid=state.next_cid + len(added),
        )
        if not complete:
            # restoration clause: a subset of a previously complete state
            cids = new.cids()
            if any(cids <= snap for snap in snapshots):
                new = replace(new, complete=True)
        if new.complete and new.cids() not in new.complete_snapshots:
            new = replace(new, complete_snapshots=new.complete_snapshots + (new.cids(),))
        self._assert_bounds(new)
        return new

    def _assert_bounds(self, state: ProofState):
        """Runtime check of the bound-preservation invariant (tag sanity)."""
        for ctx in state.contexts:
            for bound, side, tag in (
                (ctx.left_bound, ctx.lhs, ctx.tag_left),
                (ctx.right_bound, ctx.rhs, ctx.tag_right),
            ):
                if tag == TAG_BULLET:
                    ok = bound is None
                elif tag == TAG_EQUAL:
                    ok = bound == side
                else:
                    ok = bound is not None and bound != side
                if not ok:
                    raise AssertionError(
                        f"internal error: context {ctx.cid} violates the bounds invariant"
                    )

    def _fresh_cids(self, state: ProofState, count: int) -> list[int]:
        return list(range(state.next_cid, state.next_cid + count))

    def _q_extra(self, state: ProofState) -> list[Rule]:
        rules, _, _ = q_rules(state.ledger)
        return rules

    def _satisfiable(self, phi: Term) -> bool:
        return self.session.satisfiable(phi).status == "sat"

    # -- ordering conditions -------------------------------------------------

    def _strong_geq(
        self,
        state: ProofState,
        psi: Term,
        bound: Optional[Term],
        target: Term,
        origin: str,
        allow_pending: bool = True,
    ) -> tuple[ProofState, str]:
        """Establish bound >= target in the strongly-bounded sense (equal or
        strictly greater).  Returns the new state and a justification tag.

        Raises ordering-refuted when the comparison is impossible; records a
        pending strict requirement when allowed and not syntactic."""
        if bound is None:
            return state, TAG_BULLET
        if bound == target:
            return state, TAG_EQUAL
        chain = baseline_geq(
            bound, target, psi, self.sys, self.session, self._q_extra(state), strict=True
        )
        if chain is not None:
            return state, TAG_STEP
        if not allow_pending:
            raise RuleError(
                "ordering-refuted",
                f"cannot establish {format_term(bound)} > {format_term(target)} [{format_term(psi)}]",
            )
        req = BoundingRequirement(bound, target, psi, strict=True, origin=origin)
        state, _ = self._record_requirement(state, req)
        return state, TAG_REQ

    def _record_requirement(
        self, state: ProofState, req: BoundingRequirement
    ) -> tuple[ProofState, int]:
        """Add a requirement, deduplicating modulo renaming and constraint
        strengthening: an existing entry subsumes the new one when a
        syntactic renaming carries its sides onto the new sides and the new
        constraint implies the renamed old one."""
        for i, existing in enumerate(state.ledger.items):
            if existing.strict != req.strict or existing.status == "failed":
                continue
            if (existing.left is None) != (req.left is None):
                continue
            if existing.left is not None:
                m1 = match(existing.left, req.left)
                if m1 is None:
                    continue
                m2 = match(existing.right, req.right, m1.as_dict())
            else:
                m2 = match(existing.right, req.right)
            if m2 is None:
                continue
            if any(not image.is_var for _, image in m2.items()):
                continue
            renamed = apply_subst(existing.constraint, m2)
            if implies_valid(self.session, req.constraint, renamed).status == "valid":
                return state, i
        ledger, index = state.ledger.add(req)
        return replace(state, ledger=ledger), index

    def _strict_above(
        self, state: ProofState, psi: Term, bound: Optional[Term], tag: str, side: Term, target: Term
    ) -> bool:
        """bound > target given the side's strong flag: the target is a
        subterm of the side, so any certified bound > side carries over; when
        bound equals the side a strict subterm step is still enough."""
        if bound is None:
            return True
        if tag in (TAG_STEP, TAG_REQ):
            return any(subterm_at(side, p) == target for p in positions(side))
        if tag == TAG_EQUAL:
            return any(
                subterm_at(side, p) == target for p in positions(side) if p != EPSILON
            )
        return False

    # -- state construction ---------------------------------------------------

    def init_goals(self, eqs: Sequence[Equation]) -> ProofState:
        contexts = []
        for i, eq in enumerate(eqs, start=1):
            if eq.lhs.typ != eq.rhs.typ:
                raise RuleError("ill-typed-equation", f"goal {i}: sides have different types")
            if not is_constraint(eq.constraint):
                raise RuleError("ill-typed-equation", f"goal {i}: guard is not a constraint")
            contexts.append(
                EquationContext(i, None, eq.lhs, eq.rhs, None, eq.constraint)
            )
        state = ProofState(contexts=tuple(contexts), next_cid=len(contexts) + 1)
        state = replace(state, complete_snapshots=(state.cids(),))
        return state

    def goal_contexts(self, contexts: Sequence[EquationContext]) -> ProofState:
        """Start from explicit contexts (the ground-confluence driver)."""
        renumbered = [replace(c, cid=i) for i, c in enumerate(contexts, start=1)]
        state = ProofState(contexts=tuple(renumbered), next_cid=len(renumbered) + 1)
        state = replace(state, complete_snapshots=(state.cids(),))
        self._assert_bounds(state)
        return state

    # -- the deduction rules ---------------------------------------------------

    def induct(self, state: ProofState, cid: int) -> ProofState:
        ctx = state.context(cid)
        eq = ctx.equation()
        hyps = state.hypotheses
        if eq in hyps:
            self.warn(f"induction hypothesis {eq!r} already present")
        new_ctx = EquationContext(
            state.next_cid, ctx.lhs, ctx.lhs, ctx.rhs, ctx.rhs, ctx.constraint, TAG_EQUAL, TAG_EQUAL
        )
        return self._advance(
            state, cid, [new_ctx], "induct", True, hypotheses=hyps + (eq,)
        )

    def case_split(
        self, state: ProofState, cid: int, coverset: list[tuple[Substitution, Term]]
    ) -> ProofState:
        ctx = state.context(cid)
        added = []
        for offset, (delta, phi) in enumerate(coverset):
            lb = None if ctx.left_bound is None else apply_subst(ctx.left_bound, delta)
            rb = None if ctx.right_bound is None else apply_subst(ctx.right_bound, delta)
            added.append(
                EquationContext(
                    state.next_cid + offset,
                    lb,
                    apply_subst(ctx.lhs, delta),
                    apply_subst(ctx.rhs, delta),
                    rb,
                    conj(apply_subst(ctx.constraint, delta), phi),
                    ctx.tag_left,
                    ctx.tag_right,
                )
            )
        return self._advance(state, cid, added, "case", True)

    def case_by_constraints(self, state: ProofState, cid: int, phis: list[Term]) -> ProofState:
        ctx = state.context(cid)
        for phi in phis:
            if not is_constraint(phi):
                raise RuleError("coverset-not-verified", f"{format_term(phi)} is not a constraint")
        disjunction = phis[0]
        for phi in phis[1:]:
            from .theory import OR

            disjunction = app(OR, disjunction, phi)
        verdict = implies_valid(self.session, ctx.constraint, disjunction)
        if verdict.status != "valid":
            raise RuleError(
                "coverset-not-verified",
                "the constraints do not cover the current constraint"
                + (f" (countermodel {verdict.model!r})" if verdict.model else ""),
            )
        return self.case_split(state, cid, [(Substitution(), phi) for phi in phis])

    def case_by_variable(self, state: ProofState, cid: int, var_name: str) -> ProofState:
        ctx = state.context(cid)
        target = None
        for v in sorted(ctx.all_variables(), key=lambda v: (v.name, v.vid)):
            if v.name == var_name:
                target = v
                break
        if target is None:
            raise RuleError("bad-selector", f"no variable {var_name} in context {cid}")
        if target.typ in THEORY_SORTS:
            raise RuleError(
                "coverset-not-verified",
                f"{var_name} has a theory sort; split on constraints instead",
            )
        heads = self.sys.constructors_for(target.typ)
        if not heads:
            raise RuleError(
                "coverset-not-verified", f"no semi-constructor shapes of type {target.typ!r}"
            )
        taken = {v.name for v in ctx.all_variables()}
        coverset = []
        for sym, j in heads:
            arg_types = type_args(sym.typ)[:j]
            args = []
            for i, at in enumerate(arg_types, start=1):
                name = rename_name(f"{var_name}{i}", taken)
                taken.add(name)
                args.append(var_term(fresh_variable(name, at)))
            coverset.append((Substitution({target: app(sym, *args)}), TRUE_TERM))
        return self.case_split(state, cid, coverset)

    def delete(self, state: ProofState, cid: int) -> ProofState:
        ctx = state.context(cid)
        if ctx.lhs != ctx.rhs:
            verdict = self.session.satisfiable(ctx.constraint)
            if verdict.status != "unsat":
                raise RuleError(
                    "not-deletable",
                    "sides differ and the constraint is satisfiable"
                    if verdict.status == "sat"
                    else "sides differ and satisfiability is unknown",
                )
        return self._advance(state, cid, [], "delete", True)

    def semiconstructor(self, state: ProofState, cid: int) -> ProofState:
        ctx = state.context(cid)
        s, t = ctx.lhs, ctx.rhs
        if s.head != t.head or len(s.args) != len(t.args):
            raise RuleError("head-mismatch", "sides must share head and argument count")
        n = len(s.args)
        if n == 0:
            raise RuleError("head-mismatch", "no arguments to split")
        head_is_symbol = isinstance(s.head, FunctionSymbol)
        if head_is_symbol:
            ar = self.sys.arity_of(s.head)
            if ar is not None and n >= ar:
                raise RuleError(
                    "arity-too-high",
                    f"{s.head.name} applied to {n} arguments is not below its arity {ar}",
                )
        added = []
        for i in range(n):
            tag_l = ctx.tag_left if ctx.tag_left == TAG_BULLET else TAG_STEP
            tag_r = ctx.tag_right if ctx.tag_right == TAG_BULLET else TAG_STEP
            added.append(
                EquationContext(
                    state.next_cid + i,
                    ctx.left_bound,
                    s.args[i],
                    t.args[i],
                    ctx.right_bound,
                    ctx.constraint,
                    tag_l,
                    tag_r,
                )
            )
        if not head_is_symbol:
            self.warn("semi-constructor with variable head clears completeness")
        return self._advance(state, cid, added, "semiconstructor", head_is_symbol)

    def postulate(self, state: ProofState, eq: Equation) -> ProofState:
        if eq.lhs.typ != eq.rhs.typ:
            raise RuleError("ill-typed", "postulated sides have different types")
        if not is_constraint(eq.constraint):
            raise RuleError("ill-typed", "postulated guard is not a constraint")
        for ctx in state.contexts:
            if ctx.equation() == eq:
                self.warn("postulated equation duplicates an existing goal")
        new_ctx = EquationContext(state.next_cid, None, eq.lhs, eq.rhs, None, eq.constraint)
        return self._advance(state, None, [new_ctx], "postulate", False)

    # -- rewriting a side -------------------------------------------------------

    def _side_term(self, ctx: EquationContext, side: str) -> Term:
        return ctx.lhs if side == "left" else ctx.rhs

    def _with_side(
        self, ctx: EquationContext, side: str, new_term: Term, new_tag: str, new_cid: int
    ) -> EquationContext:
        if side == "left":
            return EquationContext(
                new_cid, ctx.left_bound, new_term, ctx.rhs, ctx.right_bound,
                ctx.constraint, new_tag, ctx.tag_right,
            )
        return EquationContext(
            new_cid, ctx.left_bound, ctx.lhs, new_term, ctx.right_bound,
            ctx.constraint, ctx.tag_left, new_tag,
        )

    def _bound_and_tag(self, ctx: EquationContext, side: str):
        if side == "left":
            return ctx.left_bound, ctx.tag_left
        return ctx.right_bound, ctx.tag_right

    def _calc_candidates(self, u: Term, psi: Term) -> list[Term]:
        """Images for the fresh result variable of a calculation rule."""
        from .terms import is_ground
        from .theory import EvaluationError, evaluate

        out = []
        if is_ground(u) and is_theory_term(u):
            try:
                out.append(value_term(evaluate(u)))
            except EvaluationError:
                pass
        for v in sorted(variables(psi), key=lambda v: (v.name, v.vid)):
            if v.typ != u.typ:
                continue
            eqc = calc_result_constraint(var_term(v), u)
            if implies_valid(self.session, psi, eqc).status == "valid":
                out.append(var_term(v))
        return out

    def _complete_delta(
        self,
        sigma: Substitution,
        needed: set[Variable],
        psi: Term,
        phi: Term,
        user_delta: Optional[Substitution],
    ) -> Optional[Substitution]:
        """Extend a matching substitution to cover extra rule/hypothesis
        variables so that psi entails phi under it."""
        extras = sorted(needed - sigma.domain(), key=lambda v: (v.name, v.vid))
        if user_delta is not None:
            for v in extras:
                image = user_delta.get(v)
                if image is not None:
                    sigma = sigma.extend(v, image)
            extras = sorted(needed - sigma.domain(), key=lambda v: (v.name, v.vid))
        if not extras:
            return sigma if entails_under(self.session, psi, sigma, phi) else None
        candidate_lists = []
        psi_vars = sorted(variables(psi), key=lambda v: (v.name, v.vid))
        for v in extras:
            candidates = [var_term(w) for w in psi_vars if w.typ == v.typ]
            if not candidates:
                return None
            candidate_lists.append(candidates)
        for combo in itertools.islice(itertools.product(*candidate_lists), 200):
            attempt = sigma
            for v, image in zip(extras, combo):
                attempt = attempt.extend(v, image)
            if entails_under(self.session, psi, attempt, phi):
                return attempt
        return None

    def simplify(
        self,
        state: ProofState,
        cid: int,
        side: str,
        rule: Union[Rule, str],
        position: Position,
        delta: Optional[Substitution] = None,
    ) -> ProofState:
        ctx = state.context(cid)
        term = self._side_term(ctx, side)
        u = subterm_at(term, position)
        if rule == "calc":
            resolved = self._calc_rule_instance(u, ctx.constraint, delta)
            if resolved is None:
                raise RuleError("no-match", f"no calculation step at {position!r}")
            rule, sigma = resolved
        else:
            sigma = match(rule.lhs, u)
            if sigma is None:
                raise RuleError(
                    "no-match", f"rule {rule.name} does not match {format_term(u)}"
                )
            needed = (variables(rule.constraint) | variables(rule.rhs)) - variables(rule.lhs)
            sigma = self._complete_delta(sigma, needed, ctx.constraint, rule.constraint, delta)
            if sigma is None:
                raise RuleError(
                    "entailment-failed",
                    f"the guard of {rule.name} is not entailed by the context constraint",
                )
        new_term = replace_at(term, position, apply_subst(rule.rhs, sigma))
        bound, tag = self._bound_and_tag(ctx, side)
        new_tag = tag if tag in (TAG_BULLET, TAG_STEP, TAG_REQ) else TAG_STEP
        new_ctx = self._with_side(ctx, side, new_term, new_tag, state.next_cid)
        return self._advance(state, cid, [new_ctx], "simplify", True)

    def _calc_rule_instance(
        self, u: Term, psi: Term, delta: Optional[Substitution]
    ) -> Optional[tuple[Rule, Substitution]]:
        from .rewriting import calc_rule_for

        if not (
            isinstance(u.head, FunctionSymbol)
            and u.head.kind == "theory"
            and not u.head.is_value
            and len(u.args) == len(type_args(u.head.typ))
            and is_theory_term(u)
        ):
            return None
        rule = calc_rule_for(u.head)
        sigma = match(rule.lhs, u)
        assert sigma is not None
        y = rule.rhs.head
        if delta is not None:
            image = delta.get(y)
            if image is None and len(delta) == 1:
                image = delta.items()[0][1]
            if image is not None:
                sigma2 = sigma.extend(y, image)
                if entails_under(self.session, psi, sigma2, rule.constraint):
                    return rule, sigma2
                return None
        for image in self._calc_candidates(u, psi):
            sigma2 = sigma.extend(y, image)
            if entails_under(self.session, psi, sigma2, rule.constraint):
                return rule, sigma2
        return None

    def hypothesis(
        self,
        state: ProofState,
        cid: int,
        side: str,
        hyp_index: int,
        direction: str,
        position: Position,
        delta: Optional[Substitution] = None,
    ) -> ProofState:
        ctx = state.context(cid)
        if not (1 <= hyp_index <= len(state.hypotheses)):
            raise RuleError("bad-selector", f"no hypothesis {hyp_index}")
        hyp = state.hypotheses[hyp_index - 1]
        lhs, rhs = (hyp.lhs, hyp.rhs) if direction == "lr" else (hyp.rhs, hyp.lhs)
        term = self._side_term(ctx, side)
        u = subterm_at(term, position)
        sigma = match(lhs, u)
        if sigma is None:
            raise RuleError("no-match", "the hypothesis side does not match the subterm")
        needed = (variables(hyp.constraint) | variables(rhs)) - variables(lhs)
        sigma = self._complete_delta(sigma, needed, ctx.constraint, hyp.constraint, delta)
        if sigma is None:
            raise RuleError(
                "entailment-failed", "the hypothesis guard is not entailed here"
            )
        psi = ctx.constraint
        bound, tag = self._bound_and_tag(ctx, side)
        # condition 1: bound > lhs-instance
        if not self._strict_above(state, psi, bound, tag, term, u):
            if self._satisfiable(psi):
                raise RuleError(
                    "ordering-refuted",
                    "the bounding term does not strictly dominate the rewritten instance",
                )
        rdelta = apply_subst(rhs, sigma)
        new_term = replace_at(term, position, rdelta)
        # condition 3 (strong form): bound >= the whole rewritten side
        state2, tag3 = self._strong_geq(
            state, psi, bound, new_term, origin=f"hypothesis@{cid}"
        )
        # condition 2: bound > rhs-instance; follows from 3 unless equal at root
        if tag3 == TAG_EQUAL and position == EPSILON and self._satisfiable(psi):
            raise RuleError(
                "ordering-refuted", "bound equals the replaced instance (irreflexivity)"
            )
        new_ctx = self._with_side(ctx, side, new_term, tag3, state2.next_cid)
        return self._advance(state2, cid, [new_ctx], "hypothesis", True)

    def hdelete(
        self,
        state: ProofState,
        cid: int,
        hyp_index: Optional[int] = None,
        direction: Optional[str] = None,
        delta: Optional[Substitution] = None,
    ) -> ProofState:
        ctx = state.context(cid)
        psi = ctx.constraint
        indices = (
            [hyp_index] if hyp_index is not None else list(range(1, len(state.hypotheses) + 1))
        )
        directions = [direction] if direction else ["lr", "rl"]
        found = None
        for hi in indices:
            if not (1 <= hi <= len(state.hypotheses)):
                raise RuleError("bad-selector", f"no hypothesis {hi}")
            hyp = state.hypotheses[hi - 1]
            for d in directions:
                lhs, rhs = (hyp.lhs, hyp.rhs) if d == "lr" else (hyp.rhs, hyp.lhs)
                for p in sorted(positions(ctx.lhs), key=lambda p: (p.path, p.star)):
                    try:
                        u = subterm_at(ctx.lhs, p)
                    except Exception:
                        continue
                    sigma = match(lhs, u)
                    if sigma is None:
                        continue
                    if p not in positions(ctx.rhs):
                        continue
                    sigma2 = match(rhs, subterm_at(ctx.rhs, p), sigma.as_dict())
                    if sigma2 is None:
                        continue
                    marker = var_term(fresh_variable("hole", u.typ))
                    if replace_at(ctx.lhs, p, marker) != replace_at(ctx.rhs, p, marker):
                        continue
                    full = self._complete_delta(
                        sigma2,
                        variables(hyp.constraint) - variables(lhs) - variables(rhs),
                        psi,
                        hyp.constraint,
                        delta,
                    )
                    if full is None:
                        continue
                    found = (hi, d, p, full, u, subterm_at(ctx.rhs, p))
                    break
                if found:
                    break
            if found:
                break
        if found is None:
            raise RuleError(
                "shape-mismatch",
                "no common context with hypothesis instances on both sides",
            )
        hi, d, p, sigma, linst, rinst = found
        cond_left = self._strict_above(state, psi, ctx.left_bound, ctx.tag_left, ctx.lhs, linst)
        cond_right = self._strict_above(
            state, psi, ctx.right_bound, ctx.tag_right, ctx.rhs, rinst
        )
        if not (cond_left or cond_right):
            recordable = []
            if ctx.left_bound is not None and ctx.left_bound != linst:
                recordable.append((ctx.left_bound, linst))
            if ctx.right_bound is not None and ctx.right_bound != rinst:
                recordable.append((ctx.right_bound, rinst))
            if not recordable:
                raise RuleError(
                    "ordering-refuted",
                    "neither bounding term can strictly dominate its instance",
                )
            state, _ = self._strong_geq(
                state, psi, recordable[0][0], recordable[0][1], origin=f"hdelete@{cid}"
            )
        return self._advance(state, cid, [], "hdelete", True)

    # -- generalize / alter ------------------------------------------------------

    def generalize(
        self,
        state: ProofState,
        cid: int,
        new_eq: Equation,
        witness: Optional[Substitution] = None,
    ) -> ProofState:
        ctx = state.context(cid)
        sigma = witness
        if sigma is None:
            sigma = match(new_eq.lhs, ctx.lhs)
            if sigma is not None:
                sigma = match(new_eq.rhs, ctx.rhs, sigma.as_dict())
        else:
            if (
                apply_subst(new_eq.lhs, sigma) != ctx.lhs
                or apply_subst(new_eq.rhs, sigma) != ctx.rhs
            ):
                sigma = None
        if sigma is None:
            raise RuleError(
                "verification-failed",
                "the current sides are not an instance of the supplied equation",
            )
        if not entails_under(self.session, ctx.constraint, sigma, new_eq.constraint):
            raise RuleError(
                "verification-failed",
                "the current constraint does not support the generalized constraint",
            )
        new_ctx = EquationContext(
            state.next_cid,
            new_eq.lhs,
            new_eq.lhs,
            new_eq.rhs,
            new_eq.rhs,
            new_eq.constraint,
            TAG_EQUAL,
            TAG_EQUAL,
        )
        return self._advance(state, cid, [new_ctx], "generalize", False)

    def _inextensible_theory_sorts(self) -> bool:
        from .terms import result_sort

        return not any(
            result_sort(c.typ) in THEORY_SORTS for c in self.sys.constructors
        )

    def alter_constraint(self, state: ProofState, cid: int, new_psi: Term) -> ProofState:
        """(Alter) mode I: replace the constraint by an equi-satisfiable one."""
        ctx = state.context(cid)
        if not is_constraint(new_psi):
            raise RuleError("verification-failed", "replacement is not a constraint")
        ctx_vars = (
            variables(ctx.lhs)
            | variables(ctx.rhs)
            | (variables(ctx.left_bound) if ctx.left_bound is not None else set())
            | (variables(ctx.right_bound) if ctx.right_bound is not None else set())
        )
        if not self._inextensible_theory_sorts():
            old_free = variables(ctx.constraint) & ctx_vars
            new_free = variables(new_psi) & ctx_vars
            if old_free != new_free:
                raise RuleError(
                    "verification-failed",
                    "with extensible theory sorts both constraints must share their free variables",
                )
        if not self._equisatisfiable(ctx.constraint, new_psi, ctx_vars):
            raise RuleError(
                "verification-failed", "cannot verify the constraints equi-satisfiable"
            )
        new_ctx = EquationContext(
            state.next_cid, ctx.left_bound, ctx.lhs, ctx.rhs, ctx.right_bound,
            new_psi, ctx.tag_left, ctx.tag_right,
        )
        return self._advance(state, cid, [new_ctx], "alter", True)

    def alter_add_definitions(
        self, state: ProofState, cid: int, defs: list[tuple[Variable, Term]]
    ) -> ProofState:
        """The definition-introduction fast path of (Alter) mode I."""
        ctx = state.context(cid)
        taken = {v.name for v in ctx.all_variables() | variables(ctx.constraint)}
        new_psi = ctx.constraint
        seen: set[Variable] = set()
        for v, u in defs:
            if v.name in taken:
                raise RuleError("verification-failed", f"{v.name} is not fresh here")
            if v in variables(u) or (variables(u) & seen):
                raise RuleError(
                    "verification-failed", f"definition of {v.name} uses a later variable"
                )
            if not is_theory_term(u) or not all(
                w.typ in THEORY_SORTS for w in variables(u)
            ):
                raise RuleError("verification-failed", f"{format_term(u)} is not a theory term")
            taken.add(v.name)
            seen.add(v)
            new_psi = conj(new_psi, calc_result_constraint(var_term(v), u))
        new_ctx = EquationContext(
            state.next_cid, ctx.left_bound, ctx.lhs, ctx.rhs, ctx.right_bound,
            new_psi, ctx.tag_left, ctx.tag_right,
        )
        return self._advance(state, cid, [new_ctx], "alter", True)

    def _equisatisfiable(self, psi: Term, phi: Term, ctx_vars: set[Variable]) -> bool:
        """(exists bound-of-psi. psi) <=> (exists bound-of-phi. phi), checked
        by eliminating bound variables through their defining equalities."""
        def eliminate(constraint: Term) -> Optional[Term]:
            from .theory import EQ

            bound = variables(constraint) - ctx_vars
            parts = conjuncts(constraint)
            changed = True
            while bound and changed:
                changed = False
                for part in parts:
                    if part.head != EQ or len(part.args) != 2:
                        continue
                    for a, b in ((part.args[0], part.args[1]), (part.args[1], part.args[0])):
                        if a.is_var and a.head in bound and a.head not in variables(b):
                            sub = Substitution({a.head: b})
                            parts = [apply_subst(q, sub) for q in parts if q is not part]
                            bound = {v for v in bound if v != a.head}
                            changed = True
                            break
                    if changed:
                        break
            if bound:
                return None
            return conj(*parts)

        left = eliminate(psi)
        right = eliminate(phi)
        if left is None or right is None:
            return False
        return (
            implies_valid(self.session, left, right).status == "valid"
            and implies_valid(self.session, right, left).status == "valid"
        )

    def alter_explicit(self, state: ProofState, cid: int, new_eq: Equation) -> ProofState:
        """(Alter) with a user-supplied replacement equation: both
        generalization directions are checked by matching, so the two
        contexts have the same ground semi-constructor instances."""
        ctx = state.context(cid)
        forward = match(new_eq.lhs, ctx.lhs)
        if forward is not None:
            forward = match(new_eq.rhs, ctx.rhs, forward.as_dict())
        if forward is None or not entails_under(
            self.session, ctx.constraint, forward, new_eq.constraint
        ):
            raise RuleError(
                "verification-failed", "the new equation does not generalize the old one"
            )
        backward = match(ctx.lhs, new_eq.lhs)
        if backward is not None:
            backward = match(ctx.rhs, new_eq.rhs, backward.as_dict())
        if backward is None or not entails_under(
            self.session, new_eq.constraint, backward, ctx.constraint
        ):
            raise RuleError(
                "verification-failed", "the old equation does not generalize the new one"
            )
        new_ctx = EquationContext(
            state.next_cid,
            new_eq.lhs,
            new_eq.lhs,
            new_eq.rhs,
            new_eq.rhs,
            new_eq.constraint,
            TAG_EQUAL,
            TAG_EQUAL,
        )
        return self._advance(state, cid, [new_ctx], "alter", True)

    def alter_substitute(
        self, state: ProofState, cid: int, mapping: list[tuple[Variable, Term]]
    ) -> ProofState:
        """(Alter) mode II: replace variables by constraint-equal variables or
        values; the constraint itself is unchanged."""
        ctx = state.context(cid)
        eqs = []
        for v, u in mapping:
            if not (u.is_var or is_value(u)):
                raise RuleError("verification-failed", f"{format_term(u)} is not a variable or value")
            if v.typ != u.typ:
                raise RuleError("verification-failed", f"substitution for {v.name} is ill-typed")
            if v.typ not in THEORY_SORTS:
                raise RuleError(
                    "verification-failed", f"{v.name} is not theory-sorted; the constraint cannot force it"
                )
            eqs.append(calc_result_constraint(var_term(v), u))
        goal = conj(*eqs)
        verdict = implies_valid(self.session, ctx.constraint, goal)
        if verdict.status != "valid":
            raise RuleError(
                "verification-failed", "the constraint does not force the claimed equalities"
            )
        gamma = Substitution({v: u for v, u in mapping})
        new_ctx = EquationContext(
            state.next_cid,
            None if ctx.left_bound is None else apply_subst(ctx.left_bound, gamma),
            apply_subst(ctx.lhs, gamma),
            apply_subst(ctx.rhs, gamma),
            None if ctx.right_bound is None else apply_subst(ctx.right_bound, gamma),
            ctx.constraint,
            ctx.tag_left,
            ctx.tag_right,
        )
        return self._advance(state, cid, [new_ctx], "alter", True)

    def eq_delete(self, state: ProofState, cid: int) -> ProofState:
        """Alter mode II followed by (Delete): unify the sides by a renaming
        to variables/values that the constraint forces equal."""
        ctx = state.context(cid)
        if ctx.lhs == ctx.rhs:
            return self._advance(state, cid, [], "eq-delete", True)
        sigma = unify(ctx.lhs, ctx.rhs)
        if sigma is None:
            raise RuleError("not-applicable", "the sides do not unify")
        eqs = []
        for v, u in sigma.items():
            if not (u.is_var or is_value(u)):
                raise RuleError("not-applicable", f"unifier binds {v.name} to a composite term")
            if v.typ not in THEORY_SORTS:
                raise RuleError("not-applicable", f"unifier binds non-theory variable {v.name}")
            eqs.append(calc_result_constraint(var_term(v), u))
        verdict = implies_valid(self.session, ctx.constraint, conj(*eqs))
        if verdict.status != "valid":
            raise RuleError(
                "not-applicable", "the constraint does not force the sides equal"
            )
        return self._advance(state, cid, [], "eq-delete", True)

    # -- calc, axioms, expand ------------------------------------------------------

    def _calc_spots(self, term: Term, psi: Term) -> list[Position]:
        """Maximal theory subterms worth abstracting: composite, not below
        another theory subterm, variables constrained or sorts inextensible."""
        spots: list[Position] = []

        def walk(u: Term, path: tuple[int, ...]):
            if (
                is_theory_term(u)
                and not u.is_var
                and not is_value(u)
                and u.typ in THEORY_SORTS
                and not (isinstance(u.head, Variable) and u.args)
            ):
                spots.append(Position(path, 0))
                return
            for i, a in enumerate(u.args, start=1):
                walk(a, path + (i,))

        walk(term, ())
        return spots

    def calc(
        self,
        state: ProofState,
        cid: int,
        left_positions: Optional[list[Position]] = None,
        right_positions: Optional[list[Position]] = None,
    ) -> ProofState:
        ctx = state.context(cid)
        psi = ctx.constraint
        if left_positions is None and right_positions is None:
            left_positions = self._calc_spots(ctx.lhs, psi)
            right_positions = self._calc_spots(ctx.rhs, psi)
        left_positions = left_positions or []
        right_positions = right_positions or []
        if not left_positions and not right_positions:
            raise RuleError("not-theory-subterm", "no theory subterms to abstract")
        inextensible = self._inextensible_theory_sorts()
        taken = {v.name for v in ctx.all_variables()}
        new_psi = psi
        counter = itertools.count(1)

        def abstract(term: Term, plist: list[Position]) -> Term:
            nonlocal new_psi
            for p in plist:
                u = subterm_at(term, p)
                if not is_theory_term(u) or u.typ not in THEORY_SORTS:
                    raise RuleError(
                        "not-theory-subterm", f"{format_term(u)} is not a theory subterm"
                    )
                if not inextensible and not (variables(u) <= variables(psi)):
                    raise RuleError(
                        "not-theory-subterm",
                        f"variables of {format_term(u)} are unconstrained and theory sorts are extensible",
                    )
                if u.is_var or is_value(u):
                    self.warn(f"abstracting the trivial theory term {format_term(u)}")
                name = rename_name(f"x{next(counter)}", taken)
                taken.add(name)
                x = fresh_variable(name, u.typ)
                new_psi = conj(new_psi, calc_result_constraint(var_term(x), u))
                term = replace_at(term, p, var_term(x))
            return term

        new_lhs = abstract(ctx.lhs, left_positions)
        new_rhs = abstract(ctx.rhs, right_positions)
        tag_l = ctx.tag_left if (not left_positions or ctx.tag_left != TAG_EQUAL) else TAG_STEP
        tag_r = ctx.tag_right if (not right_positions or ctx.tag_right != TAG_EQUAL) else TAG_STEP
        new_ctx = EquationContext(
            state.next_cid, ctx.left_bound, new_lhs, new_rhs, ctx.right_bound,
            new_psi, tag_l, tag_r,
        )
        return self._advance(state, cid, [new_ctx], "calc", True)

    def axiom_rewrite(
        self,
        state: ProofState,
        cid: int,
        side: str,
        axiom_index: int,
        direction: str,
        position: Position,
        delta: Optional[Substitution] = None,
    ) -> ProofState:
        if not (1 <= axiom_index <= len(self.sys.axioms)):
            raise RuleError("bad-selector", f"no axiom {axiom_index}")
        ax = self.sys.axioms[axiom_index - 1]
        if ax.mode == "ground-confluent" and self.prereqs is not None:
            self.prereqs.demand("ground-confluence", "axiom")
        ctx = state.context(cid)
        lhs, rhs = (ax.lhs, ax.rhs) if direction == "lr" else (ax.rhs, ax.lhs)
        term = self._side_term(ctx, side)
        u = subterm_at(term, position)
        sigma = match(lhs, u)
        if sigma is None:
            raise RuleError("no-match", "the axiom side does not match the subterm")
        needed = (variables(ax.constraint) | variables(rhs)) - variables(lhs)
        sigma = self._complete_delta(sigma, needed, ctx.constraint, ax.constraint, delta)
        if sigma is None:
            raise RuleError("entailment-failed", "the axiom guard is not entailed here")
        new_term = replace_at(term, position, apply_subst(rhs, sigma))
        bound, tag = self._bound_and_tag(ctx, side)
        state2, tag_new = self._strong_geq(
            state, ctx.constraint, bound, new_term, origin=f"axiom@{cid}", allow_pending=False
        )
        new_ctx = self._with_side(ctx, side, new_term, tag_new, state2.next_cid)
        return self._advance(state2, cid, [new_ctx], "axiom", False)

    def expand(self, state: ProofState, cid: int, side: str, position: Position) -> ProofState:
        if self.prereqs is not None:
            self.prereqs.demand("quasi-reductivity", "expand")
        ctx = state.context(cid)
        term = self._side_term(ctx, side)
        u = subterm_at(term, position)
        if not isinstance(u.head, FunctionSymbol) or not self.sys.is_defined(u.head):
            raise RuleError("not-expandable", "the subterm head is not a defined symbol")
        k = self.sys.arity_of(u.head)
        if k is None or len(u.args) < k:
            raise RuleError("not-expandable", "the defined symbol is not fully applied")
        prefix_args = u.args[:k]
        if not all(is_semi_constructor(a, self.sys) for a in prefix_args):
            raise RuleError(
                "not-expandable", "the first arguments must be semi-constructor terms"
            )
        redex_prefix = Term(u.head, prefix_args)
        psi = ctx.constraint
        ctx_vars = ctx.all_variables()
        coverset: list[tuple[Substitution, Term]] = []
        chosen_rules: list[tuple[Rule, Substitution]] = []
        for rule in self.sys.rules_for(u.head):
            renaming = renaming_apart(rule.all_variables(), ctx_vars)
            lhs_r = apply_subst(rule.lhs, renaming)
            phi_r = apply_subst(rule.constraint, renaming)
            # unify with the rule side first so its variables take the
            # context's names in the children
            mgu = unify(lhs_r, redex_prefix)
            if mgu is None:
                continue
            ok = True
            for v in sorted(variables(phi_r) | variables(psi), key=lambda v: (v.name, v.vid)):
                image = mgu.get(v)
                if image is not None and not (image.is_var or is_value(image)):
                    ok = False
                    break
            if not ok:
                continue
            ctx_delta = mgu.restrict(ctx_vars)
            coverset.append((ctx_delta, apply_subst(phi_r, mgu)))
            chosen_rules.append((rule, mgu))
        state = self.induct(state, cid)
        inducted_cid = state.contexts[-1].cid
        state = self.case_split(state, inducted_cid, coverset)
        child_cids = [c.cid for c in state.contexts[-len(coverset):]]
        inner = subterm_at(term, position)
        star_shift = len(inner.args) - k
        redex_pos = Position(position.path, position.star + star_shift)
        for child_cid, (rule, _) in zip(child_cids, chosen_rules):
            state = self.simplify(state, child_cid, side, rule, redex_pos)
        return state

    # -- disprove -------------------------------------------------------------

    def _neq_constraint(self, s: Term, t: Term) -> Term:
        from .theory import AND, NOT, OR

        if s.typ == BOOL:
            return app(
                OR, app(AND, s, app(NOT, t)), app(AND, app(NOT, s), t)
            )
        from .theory import EQ

        return app(NOT, app(EQ, s, t))

    def disprove(
        self,
        state: ProofState,
        cid: int,
        instantiation: Optional[Substitution] = None,
    ) -> Refuted:
        ctx = state.context(cid)
        if not state.complete:
            raise RuleError("state-not-complete", "(Disprove) needs a complete proof state")
        if self.prereqs is not None:
            for prereq in ("quasi-reductivity", "weak-normalization", "ground-confluence"):
                self.prereqs.demand(prereq, "disprove")
        s, t, psi = ctx.lhs, ctx.rhs, ctx.constraint
        # case 1: distinct heads below their arities
        if (
            isinstance(s.head, FunctionSymbol)
            and isinstance(t.head, FunctionSymbol)
            and s.head != t.head
        ):
            ar_s = self.sys.arity_of(s.head)
            ar_t = self.sys.arity_of(t.head)
            if (ar_s is None or len(s.args) < ar_s) and (ar_t is None or len(t.args) < ar_t):
                verdict = self.session.satisfiable(psi)
                if verdict.status == "sat":
                    return Refuted(
                        ctx.equation(),
                        verdict.model or Substitution(),
                        detail=f"distinct irreducible heads {s.head.name} and {t.head.name}",
                    )
        # case 2: theory sides
        if is_theory_term(s) and is_theory_term(t):
            higher = [
                v
                for v in sorted(variables(s) | variables(t), key=lambda v: (v.name, v.vid))
                if v.typ not in THEORY_SORTS
            ]
            theta = instantiation or Substitution()
            missing = [v for v in higher if theta.get(v) is None]
            if missing:
                names = ", ".join(v.name for v in missing)
                raise RuleError(
                    "higher-order-variables",
                    f"instantiate the functional variables first ({names})",
                )
            for v in higher:
                image = theta.get(v)
                if not is_theory_term(image) or variables(image):
                    raise RuleError(
                        "higher-order-variables",
                        f"{v.name} must be instantiated by a ground theory term",
                    )
            s_i = apply_subst(s, theta)
            t_i = apply_subst(t, theta)
            goal = conj(psi, self._neq_constraint(s_i, t_i))
            verdict = self.session.satisfiable(goal)
            if verdict.status == "sat":
                return Refuted(
                    ctx.equation(),
                    verdict.model or Substitution(),
                    instantiation=instantiation,
                    detail="theory sides differ under the model",
                )
        raise RuleError("not-contradictory", "the selected equation is not contradictory")

    # -- applicability search and the auto tactic ----------------------------------

    def find_simplify(self, state: ProofState, cid: int):
        """First applicable (side, rule, position, delta) by the deterministic
        innermost-leftmost order; calculation steps come after user rules."""
        ctx = state.context(cid)
        for side in ("left", "right"):
            term = self._side_term(ctx, side)
            for p in sorted(positions(term), key=lambda p: (-len(p.path), p.path, -p.star)):
                u = subterm_at(term, p)
                if isinstance(u.head, FunctionSymbol):
                    for rule in self.sys.rules_for(u.head):
                        sigma = match(rule.lhs, u)
                        if sigma is None:
                            continue
                        needed = (
                            variables(rule.constraint) | variables(rule.rhs)
                        ) - variables(rule.lhs)
                        full = self._complete_delta(
                            sigma, needed, ctx.constraint, rule.constraint, None
                        )
                        if full is not None:
                            return side, rule, p, full
                    resolved = self._calc_rule_instance(u, ctx.constraint, None)
                    if resolved is not None:
                        rule, sigma = resolved
                        return side, rule, p, sigma
        return None

    def try_delete(self, state: ProofState, cid: int) -> bool:
        ctx = state.context(cid)
        if ctx.lhs == ctx.rhs:
            return True
        return self.session.satisfiable(ctx.constraint).status == "unsat"

    def try_eq_delete(self, state: ProofState, cid: int) -> bool:
        try:
            self.eq_delete(state, cid)
            return True
        except RuleError:
            return False

    def try_hdelete(self, state: ProofState, cid: int) -> bool:
        try:
            self.hdelete(state, cid)
            return True
        except RuleError:
            return False

    def auto(self, state: ProofState, budget: int = 200) -> DeductionOutcome:
        """Apply delete, eq-delete, hdelete, disprove, simplify, calc and
        semiconstructor until fixpoint (never induct/case/generalize/postulate)."""
        steps = 0
        progress = True
        while progress and steps < budget:
            progress = False
            for ctx in sorted(state.contexts, key=lambda c: c.cid):
                cid = ctx.cid
                if self.try_delete(state, cid):
                    state = self.delete(state, cid)
                elif self.try_eq_delete(state, cid):
                    state = self.eq_delete(state, cid)
                elif self.try_hdelete(state, cid):
                    state = self.hdelete(state, cid)
                else:
                    refuted = self._try_disprove(state, cid)
                    if refuted is not None:
                        return refuted
                    found = self.find_simplify(state, cid)
                    if found is not None:
                        side, rule, p, delta = found
                        state = self.simplify(state, cid, side, rule, p, delta)
                    elif self._calc_spots(ctx.lhs, ctx.constraint) or self._calc_spots(
                        ctx.rhs, ctx.constraint
                    ):
                        state = self.calc(state, cid)
                    else:
                        try:
                            state = self.semiconstructor(state, cid)
                        except RuleError:
                            continue
                steps += 1
                progress = True
                break
        return state

    def _try_disprove(self, state: ProofState, cid: int) -> Optional[Refuted]:
        if not state.complete:
            return None
        if self.prereqs is not None and not self.prereqs.all_available(
            ("quasi-reductivity", "weak-normalization", "ground-confluence")
        ):
            return None
        try:
            return self.disprove(state, cid)
        except RuleError:
            return None
