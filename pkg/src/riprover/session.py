"""Interactive proof sessions: state stack, transcript, trust flags, server.

A session owns one loaded system, one SMT process, and a stack of proof
states (undo pops it).  The transcript is an append-only step log whose
rendering is deterministic, so replaying a script byte-compares."""

from __future__ import annotations

import json
import socketserver
import sys as _sys
from dataclasses import dataclass, field
from typing import Optional

from .confluence import critical_peaks, ground_confluence_goals
from .engine import Engine, Equation, ProofState, Refuted, RuleError
from .ordering import q_rules
from .rewriting import (
    BudgetExceeded,
    RewriteSystem,
    check_quasi_reductivity,
    normalize,
)
from .smt import SmtSession
from .termination import TerminationResult, check_termination
from .terms import Substitution, Term, apply_subst, is_ground, var_term, variables
from .theory import THEORY_SORTS, TRUE_TERM, format_term, value_term

PREREQUISITES = (
    "quasi-reductivity",
    "termination",
    "weak-normalization",
    "ground-confluence",
)


class Prerequisites:
    """Lazy prerequisite proofs with trust fallbacks, session-cached."""

    def __init__(self, owner: "ProofSession"):
        self.owner = owner
        self._cache: dict[str, tuple[str, str]] = {}

    def status(self, name: str) -> tuple[str, str]:
        if name in self.owner.trusts:
            return ("trusted", "by session flag")
        if name in self._cache:
            return self._cache[name]
        owner = self.owner
        if name == "quasi-reductivity":
            result = check_quasi_reductivity(owner.sys, owner.smt)
            out = (result.status, result.detail)
        elif name == "termination":
            result = owner.base_termination()
            out = (result.status, result.reason)
        elif name == "weak-normalization":
            status, _ = self.status("termination")
            if status in ("proved", "trusted"):
                out = ("proved", "implied by termination")
            else:
                out = ("unknown", "termination is not established")
        elif name == "ground-confluence":
            if owner.gc_established:
                out = ("proved", "by the critical-peak driver")
            else:
                out = ("unknown", "run a --ground-confluence session or trust it")
        else:
            raise ValueError(name)
        self._cache[name] = out
        return out

    def demand(self, name: str, why: str):
        status, detail = self.status(name)
        if status not in ("proved", "trusted"):
            flag = "--trust-" + {
                "quasi-reductivity": "quasi-reductive",
                "termination": "termination",
                "weak-normalization": "weak-normalization",
                "ground-confluence": "ground-confluence",
            }[name]
            raise RuleError(
                "prerequisite-missing",
                f"{why} needs {name} ({status}: {detail}); establish it or pass {flag}",
            )

    def all_available(self, names) -> bool:
        return all(self.status(n)[0] in ("proved", "trusted") for n in names)


@dataclass
class CommandResult:
    ok: bool
    output: str = ""
    error_code: str = ""
    refuted: bool = False
    quit: bool = False


class ProofSession:
    def __init__(
        self,
        sys_: RewriteSystem,
        goals: list[Equation],
        smt: Optional[SmtSession] = None,
        trusts: Optional[set[str]] = None,
        ground_confluence_mode: bool = False,
    ):
        self.sys = sys_
        self.smt = smt or SmtSession()
        self.trusts = set(trusts or set()) | set(sys_.trust)
        self.gc_established = False
        self.prereqs = Prerequisites(self)
        self.engine = Engine(sys_, self.smt, self.prereqs)
        self.gc_mode = ground_confluence_mode
        self.goals = list(goals)
        self.peaks = []
        self._base_termination: Optional[TerminationResult] = None
        if ground_confluence_mode:
            self.prereqs.demand("termination", "the ground-confluence driver")
            self.prereqs.demand("quasi-reductivity", "the ground-confluence driver")
            self.peaks = critical_peaks(sys_, self.smt)
            contexts = ground_confluence_goals(self.peaks)
            initial = self.engine.goal_contexts(contexts)
        else:
            initial = self.engine.init_goals(goals)
        self.states: list[ProofState] = [initial]
        mode = "ground-confluence" if ground_confluence_mode else "goals"
        trusted = ",".join(sorted(self.trusts)) or "none"
        self.transcript: list[str] = [
            f"#0 session mode={mode} rules={len(sys_.rules)} goals={len(self.goals) or len(self.peaks)} trust={trusted}"
        ]
        self.command_log: list[str] = []
        self.refutation: Optional[Refuted] = None
        self.finished = False
        self.qed_clean = False
        self.conclusion = ""
        self.warnings: list[str] = []
        self._step = 0
        from .terms import result_sort

        for sym in sorted(sys_.constructors, key=lambda s: s.name):
            if result_sort(sym.typ) in THEORY_SORTS:
                self.warnings.append(
                    f"constructor {sym.name} extends a theory sort; "
                    "constraint-only case splits may no longer cover it"
                )

    # -- state plumbing --

    @property
    def state(self) -> ProofState:
        return self.states[-1]

    def base_termination(self) -> TerminationResult:
        if self._base_termination is None:
            self._base_termination = check_termination(self.sys, [], self.smt)
        return self._base_termination

    def push(self, state: ProofState, verb: str, args: str):
        before = self.state
        self.states.append(state)
        self._step += 1
        new_reqs = state.ledger.items[len(before.ledger.items):]
        delta = ""
        if new_reqs:
            names = ",".join(
                f"REQ{len(before.ledger.items) + i + 1}" for i in range(len(new_reqs))
            )
            delta = f" ledger+[{names}]"
        flags = "complete" if state.complete else "incomplete"
        ids = ",".join(str(c.cid) for c in state.contexts)
        self.transcript.append(
            f"#{self._step} {verb} {args} | E=[{ids}] H={len(state.hypotheses)}{delta} {flags}"
        )

    def record_refutation(self, refuted: Refuted, verb: str, args: str):
        self._step += 1
        self.transcript.append(f"#{self._step} {verb} {args} | BOT")
        self.refutation = refuted
        self.finished = True

    def undo(self) -> bool:
        if self.refutation is not None:
            # the refutation did not push a state; just withdraw it
            self.refutation = None
            self.finished = False
            self._step += 1
            self.transcript.append(f"#{self._step} :undo | refutation withdrawn")
            return True
        if len(self.states) <= 1:
            return False
        self.states.pop()
        self._step += 1
        self.transcript.append(f"#{self._step} :undo | E=[{','.join(str(c.cid) for c in self.state.contexts)}]")
        return True

    # -- rendering --

    def render_equations(self, full: bool = False) -> str:
        state = self.state
        if not state.contexts:
            return "No goals."
        lines = []
        for ctx in state.contexts:
            lines.append(f"  {ctx.cid}. {ctx.render(full=full)}")
        return "\n".join(lines)

    def render_hypotheses(self) -> str:
        if not self.state.hypotheses:
            return "No induction hypotheses."
        return "\n".join(
            f"  {i}. {h!r}" for i, h in enumerate(self.state.hypotheses, start=1)
        )

    def render_ledger(self) -> str:
        items = self.state.ledger.summary()
        return "\n".join(f"  {line}" for line in items) if items else "No requirements."

    # -- the ledger check --

    def check_requirements(self) -> tuple[bool, str]:
        """Abstract pending requirements into Q and run the oracle."""
        state = self.state
        lines = []
        pending = state.ledger.pending()
        rules, ledger, problems = q_rules(state.ledger)
        for p in problems:
            lines.append(f"cannot abstract {p}")
        if problems:
            return False, "\n".join(lines)
        result = check_termination(self.sys, rules, self.smt)
        lines.extend(result.certificate_lines())
        if result.status == "proved":
            for i, _ in pending:
                ledger = ledger.set_status(i, "proved", "termination oracle")
            self.states[-1] = ProofState(
                contexts=state.contexts,
                hypotheses=state.hypotheses,
                ledger=ledger,
                complete=state.complete,
                complete_snapshots=state.complete_snapshots,
                next_cid=state.next_cid,
            )
            return True, "\n".join(lines)
        if "termination" in self.trusts:
            for i, _ in pending:
                ledger = ledger.set_status(i, "trusted", "session trust flag")
            self.states[-1] = ProofState(
                contexts=state.contexts,
                hypotheses=state.hypotheses,
                ledger=ledger,
                complete=state.complete,
                complete_snapshots=state.complete_snapshots,
                next_cid=state.next_cid,
            )
            lines.append("requirements trusted (--trust-termination)")
            return True, "\n".join(lines)
        return False, "\n".join(lines)

    def conclude(self) -> str:
        """Called when E becomes empty: discharge the ledger and report."""
        ok, detail = self.check_requirements()
        self.finished = True
        lines = [detail] if detail else []
        if ok and self.state.ledger.all_green():
            trusted = any(r.status == "trusted" for r in self.state.ledger.items)
            self.qed_clean = not trusted
            if self.gc_mode:
                verdict = "proved" if not trusted and self._gc_preconditions_clean() else "conditional"
                self.gc_established = True
                lines.append(f"Ground confluence {verdict}: all critical peaks closed.")
            else:
                lines.append("QED: every goal is an inductive theorem.")
                if trusted:
                    lines.append("(modulo trusted termination of R with the abstracted requirements)")
        else:
            lines.append("All goals closed, but requirements remain unproved; not a QED.")
        self.conclusion = "\n".join(lines)
        for line in self.conclusion.splitlines():
            self.transcript.append(f"= {line}")
        return self.conclusion

    def _gc_preconditions_clean(self) -> bool:
        return (
            self.prereqs.status("termination")[0] == "proved"
            and self.prereqs.status("quasi-reductivity")[0] == "proved"
        )

    # -- soundness sampling (test oracle) --

    def sample_soundness(
        self, per_goal: int = 50, budget: int = 100_000, seed: int = 99
    ) -> list[str]:
        """After a QED: random respecting ground instances of each original
        goal must normalize to equal terms."""
        import random

        from .theory import BOOL, INT
        from .terms import Arrow, FunctionSymbol, app, arrow, type_args

        rng = random.Random(seed)
        failures = []
        from .theory import MINUS, PLUS, TIMES

        for eq in self.goals:
            for _ in range(per_goal):
                mapping = {}
                ok = True
                for v in sorted(eq.all_variables(), key=lambda v: (v.name, v.vid)):
                    if v.typ == INT:
                        mapping[v] = value_term(rng.randint(-20, 20))
                    elif v.typ == BOOL:
                        mapping[v] = value_term(rng.choice([True, False]))
                    elif v.typ == arrow(INT, INT, INT):
                        mapping[v] = Term(rng.choice([PLUS, TIMES, MINUS]))
                    elif v.typ == arrow(INT, INT):
                        op = rng.choice([PLUS, TIMES, MINUS])
                        mapping[v] = app(op, value_term(rng.randint(-3, 3)))
                    else:
                        generated = _random_gsc(self.sys, v.typ, rng)
                        if generated is None:
                            ok = False
                            break
                        mapping[v] = generated
                if not ok:
                    failures.append(f"cannot instantiate a variable of {eq!r}")
                    break
                gamma = Substitution(mapping)
                from .theory import evaluate

                if eq.constraint != TRUE_TERM:
                    if evaluate(apply_subst(eq.constraint, gamma)) is not True:
                        continue  # does not respect the guard
                try:
                    left = normalize(apply_subst(eq.lhs, gamma), self.sys, budget)
                    right = normalize(apply_subst(eq.rhs, gamma), self.sys, budget)
                except BudgetExceeded:
                    failures.append(f"budget exceeded normalizing an instance of {eq!r}")
                    continue
                if left != right:
                    failures.append(
                        f"instance of {eq!r} fails: {format_term(left)} vs {format_term(right)}"
                    )
        return failures


def _random_gsc(sys_: RewriteSystem, typ, rng) -> Optional[Term]:
    from .terms import app, type_args

    for _ in range(30):
        candidates = []
        for sym in sorted(sys_.symbols.values(), key=lambda s: s.name):
            args = type_args(sym.typ)
            ar = sys_.arity_of(sym)
            limit = len(args) if ar is None else ar - 1
            for j in range(0, min(limit, len(args)) + 1):
                remaining = sym.typ
                for _ in range(j):
                    remaining = remaining.res
                if remaining == typ:
                    candidates.append((sym, j))
        if not candidates:
            return None
        sym, j = rng.choice(candidates)
        parts = []
        ok = True
        for at in type_args(sym.typ)[:j]:
            if at in THEORY_SORTS:
                parts.append(value_term(rng.randint(-5, 5)))
            else:
                sub = _random_gsc(sys_, at, rng)
                if sub is None:
                    ok = False
                    break
                parts.append(sub)
        if ok:
            return app(sym, *parts)
    return None
