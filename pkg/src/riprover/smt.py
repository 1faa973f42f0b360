"""Bridge to an external SMT solver over the SMT-LIB 2 text protocol.

One solver process per session; queries are serialized.  The solver binary
defaults to the built-in fallback (``python -m riprover.smtsolver``) and can
be overridden by the ``--smt-cmd`` flag, the RIPROVER_SMT_CMD environment
variable, or an ini-style config file (section ``[smt]``, key ``cmd``)
pointed at by RIPROVER_CONFIG or found at ./riprover.cfg.

Every model returned by the solver is re-validated with exact evaluation
before use; a failing re-validation is a hard error.
"""

from __future__ import annotations

import configparser
import os
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass, field
from typing import Optional, Union

from . import smtsolver
from .terms import Substitution, Term, Variable, apply_subst, variables
from .theory import (
    BOOL,
    INT,
    EvaluationError,
    evaluate,
    is_value,
    value_term,
)


class SolverIntegrityError(Exception):
    """The solver returned a model that fails exact re-evaluation."""


class SolverUnavailableError(Exception):
    pass


@dataclass(frozen=True)
class SmtVerdict:
    status: str  # valid | invalid | sat | unsat | unknown
    model: Optional[Substitution] = None
    reason: str = ""

    def __bool__(self):
        return self.status in ("valid", "sat")


def default_command() -> list[str]:
    override = os.environ.get("RIPROVER_SMT_CMD")
    if override:
        return shlex.split(override)
    config_path = os.environ.get("RIPROVER_CONFIG", "riprover.cfg")
    if os.path.exists(config_path):
        cfg = configparser.ConfigParser()
        cfg.read(config_path)
        cmd = cfg.get("smt", "cmd", fallback="")
        if cmd:
            return shlex.split(cmd)
    return [sys.executable, "-m", "riprover.smtsolver"]


# ---------------------------------------------------------------------------
# Term -> SMT-LIB rendering

_SMT_NAMES = {
    "/\\": "and",
    "\\/": "or",
    "not": "not",
    "true": "true",
    "false": "false",
}


def _smt_var(v: Variable) -> str:
    return f"{v.name}!{v.vid}"


def render_term(t: Term) -> str:
    if isinstance(t.head, Variable):
        if t.args:
            raise ValueError(f"applied variable {t!r} has no SMT encoding")
        return _smt_var(t.head)
    sym = t.head
    if sym.is_value:
        if isinstance(sym.value, bool):
            return "true" if sym.value else "false"
        n = sym.value
        return str(n) if n >= 0 else f"(- {-n})"
    name = _SMT_NAMES.get(sym.name, sym.name)
    if not t.args:
        raise ValueError(f"partially applied {sym.name} has no SMT encoding")
    inner = " ".join(render_term(a) for a in t.args)
    return f"({name} {inner})"


def _sort_name(typ) -> str:
    if typ == INT:
        return "Int"
    if typ == BOOL:
        return "Bool"
    raise ValueError(f"no SMT sort for {typ!r}")


# ---------------------------------------------------------------------------
# Model parsing


def _parse_model(text: str) -> dict[str, Union[int, bool]]:
    exprs = smtsolver.parse_all(text)
    if not exprs:
        return {}
    body = exprs[0]
    if body and body[0] == "model":
        body = body[1:]
    out: dict[str, Union[int, bool]] = {}
    for entry in body:
        if not isinstance(entry, tuple) or not entry or entry[0] != "define-fun":
            continue
        name = entry[1]
        value = entry[-1]
        out[name] = _decode_value(value)
    return out


def _decode_value(v) -> Union[int, bool]:
    if isinstance(v, tuple):
        if v and v[0] == "-":
            return -_decode_value(v[1])
        raise ValueError(f"unexpected model value {v!r}")
    if v == "true":
        return True
    if v == "false":
        return False
    return int(v)


# ---------------------------------------------------------------------------
# The session


class SmtSession:
    """Owns one solver subprocess; all queries go through here, serialized."""

    def __init__(self, command: Optional[list[str]] = None, timeout: float = 5.0):
        self.command = command or default_command()
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._lock = threading.Lock()
        self._cache: dict[str, SmtVerdict] = {}
        self.query_count = 0

    # -- process plumbing --

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    universal_newlines=True,
                )
            except OSError as e:
                raise SolverUnavailableError(f"cannot start SMT solver {self.command}: {e}")
        return self._proc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc = None

    def _read_line(self, proc: subprocess.Popen) -> Optional[str]:
        result: list[Optional[str]] = [None]

        def reader():
            result[0] = proc.stdout.readline()

        t = threading.Thread(target=reader, daemon=True)
        t.start()
        t.join(self.timeout)
        if t.is_alive():
            self._kill()
            return None
        return result[0]

    def _read_sexp(self, proc: subprocess.Popen) -> Optional[str]:
        text = ""
        depth = 0
        while True:
            line = self._read_line(proc)
            if line is None or line == "":
                return None
            text += line
            depth += line.count("(") - line.count(")")
            if depth <= 0 and text.strip():
                return text

    # -- queries --

    def _query(self, declarations: list[str], assertion: str, want_model: bool) -> tuple[str, Optional[dict]]:
        with self._lock:
            self.query_count += 1
            proc = self._ensure()
            script = ["(reset)", "(set-logic QF_NIA)"]
            script += declarations
            script.append(f"(assert {assertion})")
            script.append("(check-sat)")
            try:
                proc.stdin.write("\n".join(script) + "\n")
                proc.stdin.flush()
            except OSError:
                self._kill()
                return ("unknown", None)
            answer = self._read_line(proc)
            if answer is None:
                return ("unknown", None)
            answer = answer.strip()
            if answer not in ("sat", "unsat", "unknown"):
                return ("unknown", None)
            model = None
            if answer == "sat" and want_model:
                try:
                    proc.stdin.write("(get-model)\n")
                    proc.stdin.flush()
                except OSError:
                    self._kill()
                    return ("unknown", None)
                text = self._read_sexp(proc)
                if text is None:
                    return ("unknown", None)
                model = _parse_model(text)
            return (answer, model)

    def _declarations(self, phi: Term) -> list[str]:
        return [
            f"(declare-fun {_smt_var(v)} () {_sort_name(v.typ)})"
            for v in sorted(variables(phi), key=lambda v: (v.name, v.vid))
        ]

    def _model_subst(self, phi: Term, raw: dict[str, Union[int, bool]]) -> Substitution:
        mapping = {}
        for v in variables(phi):
            name = _smt_var(v)
            value = raw.get(name, 0 if v.typ == INT else False)
            if v.typ == BOOL and not isinstance(value, bool):
                value = bool(value)
            mapping[v] = value_term(value)
        return Substitution(mapping)

    def _revalidate(self, phi: Term, gamma: Substitution, expected: bool):
        instance = apply_subst(phi, gamma)
        try:
            result = evaluate(instance)
        except EvaluationError as e:
            raise SolverIntegrityError(f"model not evaluable: {e}") from e
        if result is not expected:
            raise SolverIntegrityError(
                f"solver model fails re-evaluation: {instance!r} = {result}"
            )

    def satisfiable(self, phi: Term) -> SmtVerdict:
        key = "sat:" + render_term(phi)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        answer, raw = self._query(self._declarations(phi), render_term(phi), want_model=True)
        if answer == "sat":
            gamma = self._model_subst(phi, raw or {})
            self._revalidate(phi, gamma, True)
            verdict = SmtVerdict("sat", gamma)
        elif answer == "unsat":
            verdict = SmtVerdict("unsat")
        else:
            verdict = SmtVerdict("unknown", reason="solver answered unknown or timed out")
        self._cache[key] = verdict
        return verdict

    def valid(self, phi: Term) -> SmtVerdict:
        key = "valid:" + render_term(phi)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        negated = f"(not {render_term(phi)})"
        answer, raw = self._query(self._declarations(phi), negated, want_model=True)
        if answer == "unsat":
            verdict = SmtVerdict("valid")
        elif answer == "sat":
            gamma = self._model_subst(phi, raw or {})
            self._revalidate(phi, gamma, False)
            verdict = SmtVerdict("invalid", gamma)
        else:
            verdict = SmtVerdict("unknown", reason="solver answered unknown or timed out")
        self._cache[key] = verdict
        return verdict

    def valid_formula(self, declarations: list[str], formula: str) -> SmtVerdict:
        """Validity of a raw SMT-LIB formula (used by the termination oracle)."""
        key = "rawvalid:" + ";".join(declarations) + ":" + formula
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        answer, _ = self._query(declarations, f"(not {formula})", want_model=False)
        if answer == "unsat":
            verdict = SmtVerdict("valid")
        elif answer == "sat":
            verdict = SmtVerdict("invalid")
        else:
            verdict = SmtVerdict("unknown", reason="solver answered unknown or timed out")
        self._cache[key] = verdict
        return verdict


# ---------------------------------------------------------------------------
# Constraint-level judgements built on the session

import logging

logger = logging.getLogger("riprover")


def implies_valid(session: SmtSession, psi: Term, chi: Term) -> SmtVerdict:
    """Validity of psi => chi, asked as unsatisfiability of psi /\\ not chi."""
    from .theory import NOT, conj
    from .terms import app

    verdict = session.satisfiable(conj(psi, app(NOT, chi)))
    if verdict.status == "unsat":
        return SmtVerdict("valid")
    if verdict.status == "sat":
        return SmtVerdict("invalid", verdict.model)
    return SmtVerdict("unknown", reason=verdict.reason)


def entails_under(session: SmtSession, psi: Term, delta: Substitution, phi: Term) -> bool:
    """psi entails phi under delta: delta(Var(phi)) within values and Var(psi),
    and psi => phi@delta valid.  Solver unknown counts as false (warned)."""
    psi_vars = variables(psi)
    for v in variables(phi):
        image = delta.get(v)
        if image is None:
            image = Term(v)
        from .theory import is_value

        if is_value(image):
            continue
        if image.is_var and image.head in psi_vars:
            continue
        return False
    instantiated = apply_subst(phi, delta)
    verdict = implies_valid(session, psi, instantiated)
    if verdict.status == "unknown":
        logger.warning("solver returned unknown for an entailment; treating as false")
        return False
    return verdict.status == "valid"


def smt_valid(session: SmtSession, phi: Term) -> SmtVerdict:
    """Validity of a constraint (countermodel on failure)."""
    return session.valid(phi)


def smt_satisfiable(session: SmtSession, phi: Term) -> SmtVerdict:
    """Satisfiability of a constraint (respecting model on success)."""
    return session.satisfiable(phi)
