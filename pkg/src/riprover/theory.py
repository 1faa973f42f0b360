"""The fixed integer/boolean theory: values, evaluation, constraints.

The theory signature is the usual integer arithmetic one: +, -, *, the
comparisons, boolean connectives and literals, plus one value symbol per
integer.  Everything downstream talks to the theory through this module so
another theory could be swapped in behind the same surface.
"""

from __future__ import annotations

import functools
from typing import Optional, Union

from .terms import (
    Arrow,
    FunctionSymbol,
    Sort,
    Substitution,
    Term,
    Variable,
    app,
    arrow,
    is_ground,
    type_args,
    variables,
)

INT = Sort("int")
BOOL = Sort("bool")
THEORY_SORTS = {INT, BOOL}

PLUS = FunctionSymbol("+", arrow(INT, INT, INT), "theory")
MINUS = FunctionSymbol("-", arrow(INT, INT, INT), "theory")
TIMES = FunctionSymbol("*", arrow(INT, INT, INT), "theory")
LT = FunctionSymbol("<", arrow(INT, INT, BOOL), "theory")
LE = FunctionSymbol("<=", arrow(INT, INT, BOOL), "theory")
GT = FunctionSymbol(">", arrow(INT, INT, BOOL), "theory")
GE = FunctionSymbol(">=", arrow(INT, INT, BOOL), "theory")
EQ = FunctionSymbol("=", arrow(INT, INT, BOOL), "theory")
AND = FunctionSymbol("/\\", arrow(BOOL, BOOL, BOOL), "theory")
OR = FunctionSymbol("\\/", arrow(BOOL, BOOL, BOOL), "theory")
NOT = FunctionSymbol("not", arrow(BOOL, BOOL), "theory")
TRUE = FunctionSymbol("true", BOOL, "theory", value=True)
FALSE = FunctionSymbol("false", BOOL, "theory", value=False)

CALC_SYMBOLS = (PLUS, MINUS, TIMES, LT, LE, GT, GE, EQ, AND, OR, NOT)
THEORY_SYMBOLS = {s.name: s for s in CALC_SYMBOLS + (TRUE, FALSE)}

_INTERPRETATION = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "/\\": lambda a, b: a and b,
    "\\/": lambda a, b: a or b,
    "not": lambda a: not a,
}


@functools.lru_cache(maxsize=None)
def int_value(n: int) -> FunctionSymbol:
    return FunctionSymbol(str(n), INT, "theory", value=n)


def value_symbol(v: Union[int, bool]) -> FunctionSymbol:
    if isinstance(v, bool):
        return TRUE if v else FALSE
    return int_value(v)


def value_term(v: Union[int, bool]) -> Term:
    return Term(value_symbol(v))


TRUE_TERM = Term(TRUE)
FALSE_TERM = Term(FALSE)


def is_value(t: Term) -> bool:
    return not t.args and isinstance(t.head, FunctionSymbol) and t.head.is_value


def is_theory_term(t: Term) -> bool:
    """Term over theory symbols and (arbitrary) variables only."""
    if isinstance(t.head, FunctionSymbol) and t.head.kind != "theory":
        return False
    return all(is_theory_term(a) for a in t.args)


def is_theory_type(typ) -> bool:
    while isinstance(typ, Arrow):
        if typ.arg not in THEORY_SORTS:
            return False
        typ = typ.res
    return typ in THEORY_SORTS


def is_constraint(t: Term) -> bool:
    """Theory term of type bool with all variables theory-sorted."""
    return (
        t.typ == BOOL
        and is_theory_term(t)
        and all(v.typ in THEORY_SORTS for v in variables(t))
    )


class EvaluationError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def evaluate(t: Term) -> Union[int, bool]:
    """Interpretation of a ground, fully applied theory term."""
    if isinstance(t.head, Variable):
        raise EvaluationError("not-ground", f"{t!r} contains a variable")
    sym = t.head
    if sym.kind != "theory":
        raise EvaluationError("not-theory", f"{sym.name} is not a theory symbol")
    if sym.is_value:
        if t.args:
            raise EvaluationError("not-theory", f"value {sym.name} applied to arguments")
        return sym.value  # type: ignore[return-value]
    expected = len(type_args(sym.typ))
    if len(t.args) != expected:
        raise EvaluationError(
            "partial-application", f"{sym.name} applied to {len(t.args)} of {expected} arguments"
        )
    args = [evaluate(a) for a in t.args]
    return _INTERPRETATION[sym.name](*args)


def respects(gamma: Substitution, phi: Term) -> bool:
    """gamma maps Var(phi) to values and the instance evaluates to true."""
    from .terms import apply_subst

    for v in variables(phi):
        image = gamma.get(v)
        if image is None or not is_value(image):
            return False
    return evaluate(apply_subst(phi, gamma)) is True


# ---------------------------------------------------------------------------
# Constraint construction helpers


def conj(*phis: Term) -> Term:
    parts = []
    for phi in phis:
        if phi.head == TRUE and not phi.args:
            continue
        parts.append(phi)
    if not parts:
        return TRUE_TERM
    out = parts[0]
    for phi in parts[1:]:
        out = app(AND, out, phi)
    return out


def conjuncts(phi: Term) -> list[Term]:
    if phi.head == AND and len(phi.args) == 2:
        return conjuncts(phi.args[0]) + conjuncts(phi.args[1])
    return [phi]


def eq_int(a: Term, b: Term) -> Term:
    return app(EQ, a, b)


# ---------------------------------------------------------------------------
# Pretty-printing (shared by the whole package)

# operator name -> (precedence, arity); higher binds tighter
_OPS = {
    "not": (9, 1),
    "*": (8, 2),
    "+": (7, 2),
    "-": (7, 2),
    "<": (5, 2),
    "<=": (5, 2),
    ">": (5, 2),
    ">=": (5, 2),
    "=": (5, 2),
    "/\\": (3, 2),
    "\\/": (2, 2),
}

_APP_PREC = 10


def format_term(t: Optional[Term], prec: int = 0) -> str:
    if t is None:
        return "•"
    head = t.head
    if isinstance(head, FunctionSymbol) and head.name in _OPS:
        op_prec, arity = _OPS[head.name]
        if len(t.args) == arity:
            if arity == 1:
                inner = format_term(t.args[0], op_prec + 1)
                s = f"{head.name} {inner}"
            else:
                left = format_term(t.args[0], op_prec)
                right = format_term(t.args[1], op_prec + 1)
                s = f"{left} {head.name} {right}"
            return f"({s})" if prec > op_prec else s
        # partially applied operator: prefix form
        shown = f"({head.name})"
        if not t.args:
            return shown
        inner = " ".join([shown] + [format_term(a, _APP_PREC + 1) for a in t.args])
        return f"({inner})" if prec > _APP_PREC else inner
    name = head.name
    if isinstance(head, FunctionSymbol) and head.is_value and isinstance(head.value, int):
        if head.value < 0 and prec > 0:
            name = f"({name})"
    if not t.args:
        return name
    inner = " ".join([name] + [format_term(a, _APP_PREC + 1) for a in t.args])
    return f"({inner})" if prec > _APP_PREC else inner
