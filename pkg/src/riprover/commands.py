"""Command parsing and dispatch for the REPL, scripts and the session server."""

from __future__ import annotations

import json
from typing import Optional

from .engine import Equation, ProofState, Refuted, RuleError
from .parser import ParseError, parse_term_text, parse_terms_jointly
from .session import CommandResult, ProofSession
from .terms import (
    Position,
    Substitution,
    Term,
    Variable,
    fresh_variable,
    parse_position,
    positions,
    subterm_at,
    variables,
)
from .theory import TRUE_TERM, format_term, is_constraint

HELP = """Commands (see README for details):
  induct <id>                        start induction on an equation
  case <id> [c1] | [c2] | ...        split by covering constraints
  case <id> <var>                    split a variable into constructor shapes
  simplify [<id>] [<side>] [with <rule>|calc] [at <pos>]
  calc <id> [<side> at <pos> ...]    abstract theory subterms into variables
  delete <id> | eq-delete <id>       remove closed equations
  hdelete [<id>] [with <hyp>] [lr|rl]
  hypothesis <id> <side> with <hyp> [lr|rl] [at <pos>] [subst x := t, ...]
  generalize <id> <s> == <t> [c] [with x := t, ...]
  alter <id> [c'] | alter <id> add x := t, ... | alter <id> subst x := v, ...
  postulate <s> == <t> [c]
  semiconstructor <id>
  axiom <id> <side> with <n> [lr|rl] [at <pos>]
  expand <id> <side> [at <pos>]
  disprove <id> [with f := <term>, ...]
  auto [<steps>]
  :check :equations [full] :hypotheses :ledger :undo :save <f> :load <f> :help :quit"""


def _split_top(text: str, sep: str) -> list[str]:
    parts = []
    depth = 0
    current = []
    i = 0
    while i < len(text):
        c = text[i]
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        if depth == 0 and text.startswith(sep, i):
            parts.append("".join(current))
            current = []
            i += len(sep)
            continue
        current.append(c)
        i += 1
    parts.append("".join(current))
    return parts


def _find_keyword(text: str, word: str) -> int:
    """Index of a top-level keyword token, or -1."""
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        if (
            depth == 0
            and text.startswith(word, i)
            and (i == 0 or text[i - 1].isspace())
            and (i + len(word) == n or text[i + len(word)].isspace())
        ):
            return i
        i += 1
    return -1


def _ctx_env(session: ProofSession, cid: int) -> dict[str, Variable]:
    ctx = session.state.context(cid)
    return {v.name: v for v in sorted(ctx.all_variables(), key=lambda v: (v.name, v.vid))}


def _parse_assignments(
    session: ProofSession, text: str, env: dict[str, Variable], fresh_targets: bool
) -> list[tuple[Variable, Term]]:
    out = []
    for part in _split_top(text, ","):
        part = part.strip()
        if not part:
            continue
        if ":=" not in part:
            raise ParseError(f"expected name := term in {part!r}", 1, 1)
        name, _, rhs = part.partition(":=")
        name = name.strip()
        image = parse_term_text(rhs.strip(), session.sys.symbols, env)
        if fresh_targets:
            if name in env:
                raise ParseError(f"{name} is not fresh", 1, 1)
            target = fresh_variable(name, image.typ)
            env[name] = target
        else:
            if name not in env:
                raise ParseError(f"unknown variable {name}", 1, 1)
            target = env[name]
        out.append((target, image))
    return out


def _parse_equation(session: ProofSession, text: str, env=None) -> Equation:
    core, constraint = text, None
    depth = 0
    for i, c in enumerate(text):
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif c == "[" and depth == 0:
            if not text.rstrip().endswith("]"):
                raise ParseError("expected ']' at end of constraint", 1, 1)
            core = text[:i]
            constraint = text.rstrip()[i + 1:-1]
            break
    sides = _split_top(core, "==")
    if len(sides) != 2:
        raise ParseError("expected <term> == <term>", 1, 1)
    scope = dict(env or {})
    texts = [sides[0].strip(), sides[1].strip()]
    if constraint:
        texts.append(constraint.strip())
    terms = parse_terms_jointly(texts, session.sys.symbols, scope)
    phi = terms[2] if constraint else TRUE_TERM
    return Equation(terms[0], terms[1], phi)


def _resolve_rule(session: ProofSession, name: str):
    if name == "calc":
        return "calc"
    rule = session.sys.rule_named(name)
    if rule is None:
        raise ParseError(f"unknown rule {name}", 1, 1)
    return rule


def _pop_keyword_arg(rest: str, word: str) -> tuple[str, Optional[str]]:
    idx = _find_keyword(rest, word)
    if idx < 0:
        return rest, None
    return rest[:idx].strip(), rest[idx + len(word):].strip()


def execute(session: ProofSession, text: str) -> CommandResult:
    line = text.split("#", 1)[0].strip()
    if not line:
        return CommandResult(True)
    try:
        return _dispatch(session, line)
    except (RuleError,) as e:
        return CommandResult(False, output=f"error ({e.code}): {e}", error_code=e.code)
    except ParseError as e:
        return CommandResult(False, output=f"parse error: {e}", error_code="syntax")
    except Exception as e:  # internal errors surface loudly but do not kill the session
        return CommandResult(False, output=f"internal error: {e}", error_code="internal")


def _finish_if_qed(session: ProofSession, out: list[str]) -> None:
    if session.state.is_qed() and not session.finished:
        out.append(session.conclude())


def _dispatch(session: ProofSession, line: str) -> CommandResult:
    verb, _, rest = line.partition(" ")
    rest = rest.strip()
    out: list[str] = []
    eng = session.engine
    state = session.state

    def commit(new_state: ProofState, args: str = ""):
        session.push(new_state, verb, args or rest)
        session.command_log.append(line)
        for w in eng.warnings:
            out.append(f"warning: {w}")
        eng.warnings.clear()
        _finish_if_qed(session, out)

    if verb in (":quit", ":q"):
        return CommandResult(True, "\n".join(out), quit=True)
    if verb == ":help":
        return CommandResult(True, HELP)
    if verb == ":equations":
        return CommandResult(True, session.render_equations(full=rest.strip() == "full"))
    if verb == ":hypotheses":
        return CommandResult(True, session.render_hypotheses())
    if verb == ":ledger":
        return CommandResult(True, session.render_ledger())
    if verb == ":undo":
        if session.undo():
            session.command_log.append(line)
            return CommandResult(True, "undone")
        return CommandResult(False, "nothing to undo", error_code="nothing-to-undo")
    if verb == ":check":
        ok, detail = session.check_requirements()
        for name in ("quasi-reductivity", "termination", "weak-normalization"):
            status, why = session.prereqs.status(name)
            out.append(f"{name}: {status}" + (f" ({why})" if why else ""))
        out.append(detail)
        session.command_log.append(line)
        return CommandResult(True, "\n".join(out))
    if verb == ":export":
        from .ordering import q_rules
        from .parser import print_system, SystemFile

        rules, _, _ = q_rules(session.state.ledger)
        combined = session.sys.with_extra_rules(rules)
        with open(rest, "w") as fh:
            fh.write(print_system(SystemFile(combined, [])))
        return CommandResult(True, f"exported R with {len(rules)} abstracted rule(s) to {rest}")

    if verb == ":save":
        with open(rest, "w") as fh:
            fh.write("\n".join(session.command_log) + "\n")
        return CommandResult(True, f"saved {len(session.command_log)} commands to {rest}")
    if verb == ":load":
        with open(rest) as fh:
            script = fh.read()
        result = run_lines(session, script.splitlines())
        return result

    if verb == "induct":
        commit(eng.induct(state, int(rest)))
        return CommandResult(True, "\n".join(out))

    if verb == "case":
        cid_text, _, spec = rest.partition(" ")
        cid = int(cid_text)
        spec = spec.strip()
        if not spec:
            raise RuleError("bad-selector", "case needs constraints or a variable")
        if "[" in spec:
            env = _ctx_env(session, cid)
            phis = []
            for part in _split_top(spec, "|"):
                part = part.strip()
                if not (part.startswith("[") and part.endswith("]")):
                    raise ParseError(f"expected [constraint], found {part!r}", 1, 1)
                phis.append(parse_term_text(part[1:-1], session.sys.symbols, env))
            commit(eng.case_by_constraints(state, cid, phis))
        else:
            commit(eng.case_by_variable(state, cid, spec))
        return CommandResult(True, "\n".join(out))

    if verb == "simplify":
        words = rest.split()
        cid = None
        side = None
        rule = None
        pos = None
        if words and words[0].isdigit():
            cid = int(words.pop(0))
        if words and words[0] in ("left", "right"):
            side = words.pop(0)
        while words:
            w = words.pop(0)
            if w == "with" and words:
                rule = _resolve_rule(session, words.pop(0))
            elif w == "at" and words:
                pos = parse_position(words.pop(0))
            else:
                raise ParseError(f"unexpected argument {w!r}", 1, 1)
        if cid is not None and side is not None and rule is not None and pos is not None:
            # fully specified: no search, precondition failures surface directly
            new_state = eng.simplify(state, cid, side, rule, pos)
        else:
            new_state = _search_simplify(session, cid, side, rule, pos, out)
        commit(new_state)
        return CommandResult(True, "\n".join(out))

    if verb == "calc":
        words = rest.split()
        cid = int(words.pop(0))
        lefts: Optional[list[Position]] = None
        rights: Optional[list[Position]] = None
        current = None
        for w in words:
            if w in ("left", "right"):
                current = w
                if w == "left" and lefts is None:
                    lefts = []
                if w == "right" and rights is None:
                    rights = []
            elif w == "at":
                continue
            else:
                p = parse_position(w)
                if current == "left":
                    lefts.append(p)
                elif current == "right":
                    rights.append(p)
                else:
                    raise ParseError("say left/right before positions", 1, 1)
        commit(eng.calc(state, cid, lefts, rights))
        return CommandResult(True, "\n".join(out))

    if verb in ("delete", "eq-delete", "semiconstructor"):
        op = {"delete": eng.delete, "eq-delete": eng.eq_delete, "semiconstructor": eng.semiconstructor}[verb]
        if rest:
            args = rest + (" (alter+delete)" if verb == "eq-delete" else "")
            commit(op(state, int(rest)), args)
            return CommandResult(True, "\n".join(out))
        for ctx in state.contexts:
            try:
                new_state = op(state, ctx.cid)
            except RuleError:
                continue
            out.append(f"{verb} {ctx.cid}")
            commit(new_state, str(ctx.cid))
            return CommandResult(True, "\n".join(out))
        raise RuleError("bad-selector", f"no context admits {verb}")

    if verb == "hdelete":
        words = rest.split()
        cid = int(words.pop(0)) if words and words[0].isdigit() else None
        hyp = None
        direction = None
        while words:
            w = words.pop(0)
            if w == "with" and words:
                hyp = int(words.pop(0))
            elif w in ("lr", "rl"):
                direction = w
            else:
                raise ParseError(f"unexpected argument {w!r}", 1, 1)
        if cid is None:
            for ctx in state.contexts:
                try:
                    commit(eng.hdelete(state, ctx.cid, hyp, direction))
                    return CommandResult(True, "\n".join(out))
                except RuleError:
                    continue
            raise RuleError("shape-mismatch", "no context admits hdelete")
        commit(eng.hdelete(state, cid, hyp, direction))
        return CommandResult(True, "\n".join(out))

    if verb == "hypothesis":
        core, subst_text = _pop_keyword_arg(rest, "subst")
        words = core.split()
        cid = int(words.pop(0))
        side = words.pop(0)
        if side not in ("left", "right"):
            raise ParseError("hypothesis needs a side (left/right)", 1, 1)
        hyp = None
        direction = "lr"
        pos = Position((), 0)
        while words:
            w = words.pop(0)
            if w == "with" and words:
                hyp = int(words.pop(0))
            elif w in ("lr", "rl"):
                direction = w
            elif w == "at" and words:
                pos = parse_position(words.pop(0))
            else:
                raise ParseError(f"unexpected argument {w!r}", 1, 1)
        delta = None
        if subst_text:
            env = _ctx_env(session, cid)
            if hyp is not None and 1 <= hyp <= len(state.hypotheses):
                for v in state.hypotheses[hyp - 1].all_variables():
                    env.setdefault(v.name, v)
            delta = Substitution(dict(_parse_assignments(session, subst_text, env, False)))
        if hyp is None:
            raise RuleError("bad-selector", "say which hypothesis: with <n>")
        commit(eng.hypothesis(state, cid, side, hyp, direction, pos, delta))
        return CommandResult(True, "\n".join(out))

    if verb == "generalize":
        cid_text, _, spec = rest.partition(" ")
        cid = int(cid_text)
        spec, with_text = _pop_keyword_arg(spec.strip(), "with")
        env = _ctx_env(session, cid)
        eq = _parse_equation(session, spec, env={})
        witness = None
        if with_text:
            scope = dict(env)
            for v in eq.all_variables():
                scope.setdefault(v.name, v)
            assignments = []
            for part in _split_top(with_text, ","):
                part = part.strip()
                if not part:
                    continue
                name, _, rhs_text = part.partition(":=")
                name = name.strip()
                target = next((v for v in eq.all_variables() if v.name == name), None)
                if target is None:
                    raise ParseError(f"{name} is not a variable of the new equation", 1, 1)
                image = parse_term_text(rhs_text.strip(), session.sys.symbols, dict(env))
                assignments.append((target, image))
            witness = Substitution(dict(assignments))
        commit(eng.generalize(state, cid, eq, witness))
        return CommandResult(True, "\n".join(out))

    if verb == "alter":
        cid_text, _, spec = rest.partition(" ")
        cid = int(cid_text)
        spec = spec.strip()
        env = _ctx_env(session, cid)
        if spec.startswith("to "):
            eq = _parse_equation(session, spec[3:])
            commit(eng.alter_explicit(state, cid, eq))
        elif spec.startswith("add "):
            defs = _parse_assignments(session, spec[4:], env, fresh_targets=True)
            commit(eng.alter_add_definitions(state, cid, defs))
        elif spec.startswith("subst "):
            mapping = _parse_assignments(session, spec[6:], env, fresh_targets=False)
            commit(eng.alter_substitute(state, cid, mapping))
        elif spec.startswith("[") and spec.endswith("]"):
            scope = dict(env)
            phi = parse_term_text(spec[1:-1], session.sys.symbols, scope)
            commit(eng.alter_constraint(state, cid, phi))
        else:
            raise ParseError("usage: alter <id> [c] | add x := t | subst x := v | to <s> == <t> [c]", 1, 1)
        return CommandResult(True, "\n".join(out))

    if verb == "postulate":
        eq = _parse_equation(session, rest)
        commit(eng.postulate(state, eq))
        return CommandResult(True, "\n".join(out))

    if verb == "axiom":
        core, subst_text = _pop_keyword_arg(rest, "subst")
        words = core.split()
        cid = int(words.pop(0))
        side = words.pop(0)
        idx = None
        direction = "lr"
        pos = Position((), 0)
        while words:
            w = words.pop(0)
            if w == "with" and words:
                idx = int(words.pop(0))
            elif w in ("lr", "rl"):
                direction = w
            elif w == "at" and words:
                pos = parse_position(words.pop(0))
            else:
                raise ParseError(f"unexpected argument {w!r}", 1, 1)
        if idx is None:
            raise RuleError("bad-selector", "say which axiom: with <n>")
        delta = None
        if subst_text:
            env = _ctx_env(session, cid)
            ax = session.sys.axioms[idx - 1]
            from .terms import variables as _vars

            for v in _vars(ax.lhs) | _vars(ax.rhs) | _vars(ax.constraint):
                env.setdefault(v.name, v)
            delta = Substitution(dict(_parse_assignments(session, subst_text, env, False)))
        commit(eng.axiom_rewrite(state, cid, side, idx, direction, pos, delta))
        return CommandResult(True, "\n".join(out))

    if verb == "expand":
        words = rest.split()
        cid = int(words.pop(0))
        side = words.pop(0)
        pos = Position((), 0)
        while words:
            w = words.pop(0)
            if w == "at" and words:
                pos = parse_position(words.pop(0))
            else:
                raise ParseError(f"unexpected argument {w!r}", 1, 1)
        commit(eng.expand(state, cid, side, pos))
        return CommandResult(True, "\n".join(out))

    if verb == "disprove":
        core, subst_text = _pop_keyword_arg(rest, "with")
        if subst_text and subst_text.startswith("subst"):
            subst_text = subst_text[5:].strip()
        cid = int(core.strip())
        theta = None
        if subst_text:
            env = _ctx_env(session, cid)
            theta = Substitution(dict(_parse_assignments(session, subst_text, env, False)))
        refuted = eng.disprove(state, cid, theta)
        session.record_refutation(refuted, verb, rest)
        session.command_log.append(line)
        out.append(_render_refutation(refuted))
        return CommandResult(True, "\n".join(out), refuted=True)

    if verb == "auto":
        budget = int(rest) if rest else 200
        outcome = eng.auto(state, budget)
        if isinstance(outcome, Refuted):
            session.record_refutation(outcome, verb, rest)
            session.command_log.append(line)
            out.append(_render_refutation(outcome))
            return CommandResult(True, "\n".join(out), refuted=True)
        commit(outcome)
        return CommandResult(True, "\n".join(out))

    raise ParseError(f"unknown command {verb!r} (:help lists commands)", 1, 1)


def _search_simplify(session, cid, side, rule, pos, out) -> ProofState:
    eng = session.engine
    state = session.state
    cids = [cid] if cid is not None else [c.cid for c in state.contexts]
    for c in cids:
        ctx = state.context(c)
        sides = [side] if side else ["left", "right"]
        for s in sides:
            term = ctx.lhs if s == "left" else ctx.rhs
            candidate_positions = (
                [pos]
                if pos is not None
                else sorted(positions(term), key=lambda p: (-len(p.path), p.path, -p.star))
            )
            for p in candidate_positions:
                rules = [rule] if rule is not None else None
                if rules is None:
                    u = subterm_at(term, p)
                    rules = []
                    if not isinstance(u.head, Variable):
                        rules = list(session.sys.rules_for(u.head))
                    rules.append("calc")
                for r in rules:
                    try:
                        new_state = eng.simplify(state, c, s, r, p)
                        shown = r if isinstance(r, str) else r.name
                        out.append(f"simplified {c} {s} at {p!r} with {shown}")
                        return new_state
                    except RuleError:
                        continue
    raise RuleError("no-match", "no applicable simplification found")


def _render_refutation(refuted: Refuted) -> str:
    lines = ["⊥ — the goal set is refuted.", f"contradictory equation: {refuted.equation!r}"]
    if refuted.instantiation:
        inst = ", ".join(f"{v.name} := {format_term(t)}" for v, t in refuted.instantiation.items())
        lines.append(f"instantiation: {inst}")
    model = ", ".join(f"{v.name} := {format_term(t)}" for v, t in refuted.model.items())
    lines.append(f"witness model: {model}" if model else "witness model: (empty)")
    if refuted.detail:
        lines.append(refuted.detail)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Script running, REPL, server


def run_lines(session: ProofSession, lines: list[str]) -> CommandResult:
    for index, line in enumerate(lines, start=1):
        if session.finished and line.split("#", 1)[0].strip():
            return CommandResult(
                False,
                f"script step {index}: the session already finished",
                error_code="finished",
            )
        result = execute(session, line)
        if not result.ok:
            return CommandResult(
                False,
                f"script step {index}: {result.output}",
                error_code=result.error_code or "error",
            )
        if result.quit:
            break
    return CommandResult(True)


def run_script(session: ProofSession, script_text: str) -> CommandResult:
    return run_lines(session, script_text.splitlines())


def repl(session: ProofSession, instream=None, outstream=None):
    import sys as _sys

    instream = instream or _sys.stdin
    outstream = outstream or _sys.stdout
    interactive = hasattr(instream, "isatty") and instream.isatty()
    outstream.write(session.render_equations() + "\n")
    while True:
        if interactive:
            outstream.write("> ")
            outstream.flush()
        line = instream.readline()
        if not line:
            break
        result = execute(session, line)
        if result.output:
            outstream.write(result.output + "\n")
        if result.quit:
            break
        if line.split("#", 1)[0].strip() and result.ok and not result.output:
            outstream.write(session.render_equations() + "\n")
        outstream.flush()


def state_payload(session: ProofSession) -> dict:
    st = session.state
    eqs = []
    for ctx in st.contexts:
        def subterm_list(term):
            return [
                {"pos": repr(p), "text": format_term(subterm_at(term, p))}
                for p in sorted(positions(term), key=lambda p: (p.path, p.star))
            ]

        eqs.append(
            {
                "id": ctx.cid,
                "lhs": format_term(ctx.lhs),
                "rhs": format_term(ctx.rhs),
                "constraint": format_term(ctx.constraint),
                "leftBound": None if ctx.left_bound is None else format_term(ctx.left_bound),
                "rightBound": None if ctx.right_bound is None else format_term(ctx.right_bound),
                "leftMark": ctx.left_bound is not None and ctx.left_bound == ctx.lhs,
                "rightMark": ctx.right_bound is not None and ctx.right_bound == ctx.rhs,
                "rendered": ctx.render(),
                "renderedFull": ctx.render(full=True),
                "subterms": {"left": subterm_list(ctx.lhs), "right": subterm_list(ctx.rhs)},
            }
        )
    return {
        "equations": eqs,
        "hypotheses": [repr(h) for h in st.hypotheses],
        "ledger": st.ledger.summary(),
        "complete": st.complete,
        "qed": st.is_qed() and session.refutation is None,
        "refuted": session.refutation is not None,
        "finished": session.finished,
        "renderedEquations": session.render_equations(),
        "renderedEquationsFull": session.render_equations(full=True),
        "transcript": list(session.transcript[-80:]),
    }


def applicability_payload(session: ProofSession, cid: int) -> dict:
    eng = session.engine
    state = session.state
    ctx = state.context(cid)
    simplifies = []
    for s in ("left", "right"):
        term = ctx.lhs if s == "left" else ctx.rhs
        for p in sorted(positions(term), key=lambda p: (p.path, p.star)):
            u = subterm_at(term, p)
            if isinstance(u.head, Variable):
                continue
            for rule in session.sys.rules_for(u.head):
                try:
                    eng.simplify(state, cid, s, rule, p)
                except RuleError:
                    continue
                simplifies.append({"side": s, "rule": rule.name, "pos": repr(p)})
            try:
                eng.simplify(state, cid, s, "calc", p)
                simplifies.append({"side": s, "rule": "calc", "pos": repr(p)})
            except RuleError:
                pass
            if len(simplifies) >= 40:
                break
    hyps = []
    for i, hyp in enumerate(state.hypotheses, start=1):
        for direction in ("lr", "rl"):
            for s in ("left", "right"):
                term = ctx.lhs if s == "left" else ctx.rhs
                for p in sorted(positions(term), key=lambda p: (p.path, p.star)):
                    try:
                        eng.hypothesis(state, cid, s, i, direction, p)
                    except RuleError:
                        continue
                    hyps.append({"side": s, "hyp": i, "direction": direction, "pos": repr(p)})
                    if len(hyps) >= 20:
                        break
    return {
        "simplify": simplifies,
        "hypothesis": hyps,
        "delete": eng.try_delete(state, cid),
        "eqDelete": eng.try_eq_delete(state, cid),
        "hdelete": eng.try_hdelete(state, cid),
    }


def handle_request(session: ProofSession, request: dict) -> dict:
    rid = request.get("id")
    command = request.get("command", "")
    response: dict = {"id": rid, "protocol": 1}
    stripped = command.strip()
    if stripped.startswith(":applicable"):
        try:
            cid = int(stripped.split()[1])
            response["ok"] = True
            response["applicability"] = applicability_payload(session, cid)
        except (RuleError, ValueError, IndexError) as e:
            response["ok"] = False
            response["error"] = {"code": "bad-selector", "message": str(e)}
        response["state"] = state_payload(session)
        return response
    result = execute(session, command)
    response["ok"] = result.ok
    response["output"] = result.output
    if not result.ok:
        response["error"] = {"code": result.error_code, "message": result.output}
    response["quit"] = result.quit
    response["state"] = state_payload(session)
    return response


def serve_session(session: ProofSession, instream, outstream):
    """One session over newline-delimited JSON records."""
    hello = {
        "protocol": 1,
        "system": sorted(session.sys.symbols),
        "state": state_payload(session),
    }
    outstream.write(json.dumps(hello) + "\n")
    outstream.flush()
    for line in instream:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            outstream.write(json.dumps({"ok": False, "error": {"code": "bad-json", "message": str(e)}}) + "\n")
            outstream.flush()
            continue
        response = handle_request(session, request)
        outstream.write(json.dumps(response) + "\n")
        outstream.flush()
        if response.get("quit"):
            break


def serve_tcp(session_factory, host: str, port: int, ready_callback=None):
    import socket

    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen(1)
    actual_port = server.getsockname()[1]
    if ready_callback:
        ready_callback(actual_port)
    conn, _ = server.accept()
    with conn:
        instream = conn.makefile("r", encoding="utf-8")
        outstream = conn.makefile("w", encoding="utf-8")
        session = session_factory()
        serve_session(session, instream, outstream)
    server.close()
