"""Simple types, applicative terms, positions, substitutions, matching and unification.

Terms are applicative: a head (function symbol or variable) applied to an
ordered list of arguments.  Application is kept flattened (``f a b`` is one
node with two arguments), but matching and unification treat application as
a binary constructor, so variable heads and partial applications behave as
in first-order syntactic unification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------------------
# Simple types


@dataclass(frozen=True)
class Sort:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Arrow:
    arg: "SimpleType"
    res: "SimpleType"

    def __repr__(self):
        return format_type(self)


SimpleType = Union[Sort, Arrow]


def arrow(*types: SimpleType) -> SimpleType:
    """Right-associative arrow builder: arrow(a, b, c) = a -> (b -> c)."""
    if not types:
        raise ValueError("arrow() needs at least one type")
    result = types[-1]
    for t in reversed(types[:-1]):
        result = Arrow(t, result)
    return result


def type_args(t: SimpleType) -> tuple[SimpleType, ...]:
    """Argument types of t, written as sigma_1 -> ... -> sigma_m -> sort."""
    args = []
    while isinstance(t, Arrow):
        args.append(t.arg)
        t = t.res
    return tuple(args)


def result_sort(t: SimpleType) -> Sort:
    while isinstance(t, Arrow):
        t = t.res
    return t


def format_type(t: SimpleType) -> str:
    if isinstance(t, Sort):
        return t.name
    left = format_type(t.arg)
    if isinstance(t.arg, Arrow):
        left = f"({left})"
    return f"{left} -> {format_type(t.res)}"


# ---------------------------------------------------------------------------
# Symbols and variables


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    typ: SimpleType
    kind: str = "term"  # "theory" | "term"
    value: Union[int, bool, None] = None  # set exactly for value symbols

    def __repr__(self):
        return self.name

    @property
    def is_value(self) -> bool:
        return self.value is not None


_var_counter = itertools.count(1)


@dataclass(frozen=True)
class Variable:
    name: str
    typ: SimpleType
    vid: int = field(default_factory=lambda: next(_var_counter))

    def __repr__(self):
        return self.name


def fresh_variable(name: str, typ: SimpleType) -> Variable:
    return Variable(name, typ)


Head = Union[FunctionSymbol, Variable]


# ---------------------------------------------------------------------------
# Terms


class TypeError_(Exception):
    """Ill-typed term construction or replacement."""


@dataclass(frozen=True)
class Term:
    head: Head
    args: tuple["Term", ...] = ()

    def __post_init__(self):
        t = self.head.typ
        for a in self.args:
            if not isinstance(t, Arrow):
                raise TypeError_(f"over-application of {self.head}")
            if t.arg != a.typ:
                raise TypeError_(
                    f"type mismatch applying {self.head}: expected "
                    f"{format_type(t.arg)}, got {format_type(a.typ)}"
                )
            t = t.res
        object.__setattr__(self, "_typ", t)

    @property
    def typ(self) -> SimpleType:
        return self._typ  # type: ignore[attr-defined]

    @property
    def is_var(self) -> bool:
        return isinstance(self.head, Variable) and not self.args

    def __repr__(self):
        from .theory import format_term  # cycle only at repr time

        try:
            return format_term(self)
        except Exception:
            return f"Term({self.head!r}, {self.args!r})"


def app(head: Union[Head, Term], *args: Term) -> Term:
    """Build a term, flattening application of a term to further arguments."""
    if isinstance(head, Term):
        return Term(head.head, head.args + tuple(args))
    return Term(head, tuple(args))


def var_term(v: Variable) -> Term:
    return Term(v)


def variables(t: Term) -> set[Variable]:
    out: set[Variable] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u.head, Variable):
            out.add(u.head)
        stack.extend(u.args)
    return out


def is_ground(t: Term) -> bool:
    if isinstance(t.head, Variable):
        return False
    return all(is_ground(a) for a in t.args)


def is_linear(t: Term) -> bool:
    seen: set[Variable] = set()

    def walk(u: Term) -> bool:
        if u.is_var:
            if u.head in seen:
                return False
            seen.add(u.head)
            return True
        if isinstance(u.head, Variable):
            if u.head in seen:
                return False
            seen.add(u.head)
        return all(walk(a) for a in u.args)

    return walk(t)


def subterms(t: Term) -> Iterator[Term]:
    """All subterms including partial applications (one per position)."""
    for p in positions(t):
        yield subterm_at(t, p)


def head_symbol(t: Term) -> Optional[FunctionSymbol]:
    return t.head if isinstance(t.head, FunctionSymbol) else None


# ---------------------------------------------------------------------------
# Positions
#
# A position is a (possibly empty) path of argument indices (1-based)
# followed by a star component k: position path.*k of a term a t1 ... tn
# addresses the partial application a t1 ... t(n-k).  *0 at the empty path
# is the root, written epsilon.


@dataclass(frozen=True)
class Position:
    path: tuple[int, ...] = ()
    star: int = 0

    def __repr__(self):
        return format_position(self)


EPSILON = Position((), 0)


class InvalidPosition(Exception):
    pass


def format_position(p: Position) -> str:
    if not p.path and p.star == 0:
        return "ε"
    parts = [str(i) for i in p.path]
    if p.star != 0 or not parts:
        parts.append(f"*{p.star}")
    return ".".join(parts)


def parse_position(text: str) -> Position:
    text = text.strip()
    if text in ("ε", "e", ""):
        return EPSILON
    parts = text.split(".")
    star = 0
    if parts and (parts[-1].startswith("*") or parts[-1].startswith("⋆")):
        star = int(parts[-1].lstrip("*⋆"))
        parts = parts[:-1]
    try:
        path = tuple(int(x) for x in parts)
    except ValueError as e:
        raise InvalidPosition(f"bad position {text!r}") from e
    return Position(path, star)


def positions(t: Term) -> set[Position]:
    """All positions of t, including partial-application (star) positions."""
    out = {Position((), i) for i in range(len(t.args) + 1)}
    for i, a in enumerate(t.args, start=1):
        for p in positions(a):
            out.add(Position((i,) + p.path, p.star))
    return out


def subterm_at(t: Term, p: Position) -> Term:
    u = t
    for i in p.path:
        if i < 1 or i > len(u.args):
            raise InvalidPosition(f"no argument {i} in {u!r}")
        u = u.args[i - 1]
    if p.star < 0 or p.star > len(u.args):
        raise InvalidPosition(f"no star position *{p.star} in {u!r}")
    if p.star == 0:
        return u
    return Term(u.head, u.args[: len(u.args) - p.star])


def replace_at(t: Term, p: Position, s: Term) -> Term:
    """Replace the subterm of t at p by s.  s must have the type of t|_p."""
    if subterm_at(t, p).typ != s.typ:
        raise TypeError_(f"replacement at {p!r} changes the type")

    def go(u: Term, path: tuple[int, ...]) -> Term:
        if not path:
            if p.star == 0:
                return s
            kept = u.args[len(u.args) - p.star:]
            return Term(s.head, s.args + kept)
        i = path[0]
        new_args = list(u.args)
        new_args[i - 1] = go(u.args[i - 1], path[1:])
        return Term(u.head, tuple(new_args))

    return go(t, p.path)


def proper_subterms(t: Term) -> list[Term]:
    """Strict subterms of t (for the subterm relation, one per position)."""
    out = []
    for p in positions(t):
        if p == EPSILON:
            continue
        out.append(subterm_at(t, p))
    return out


# ---------------------------------------------------------------------------
# Substitutions


class Substitution:
    """A type-preserving finite map from variables to terms."""

    __slots__ = ("_map",)

    def __init__(self, mapping: Optional[dict[Variable, Term]] = None):
        m = {}
        for v, t in (mapping or {}).items():
            if t.is_var and t.head == v:
                continue  # identity binding
            if v.typ != t.typ:
                raise TypeError_(f"substitution [{v} := {t!r}] is ill-typed")
            m[v] = t
        self._map = m

    def domain(self) -> set[Variable]:
        return set(self._map)

    def get(self, v: Variable) -> Optional[Term]:
        return self._map.get(v)

    def items(self) -> list[tuple[Variable, Term]]:
        return sorted(self._map.items(), key=lambda kv: (kv[0].name, kv[0].vid))

    def as_dict(self) -> dict[Variable, Term]:
        return dict(self._map)

    def is_ground(self) -> bool:
        return all(is_ground(t) for t in self._map.values())

    def extend(self, v: Variable, t: Term) -> "Substitution":
        m = dict(self._map)
        m[v] = t
        return Substitution(m)

    def compose(self, other: "Substitution") -> "Substitution":
        """self then other: (self.compose(other))(x) = other(self(x))."""
        m = {v: apply_subst(t, other) for v, t in self._map.items()}
        for v, t in other._map.items():
            if v not in m:
                m[v] = t
        return Substitution(m)

    def restrict(self, vars_: set[Variable]) -> "Substitution":
        return Substitution({v: t for v, t in self._map.items() if v in vars_})

    def __eq__(self, other):
        return isinstance(other, Substitution) and self._map == other._map

    def __bool__(self):
        return bool(self._map)

    def __len__(self):
        return len(self._map)

    def __repr__(self):
        inner = ", ".join(f"{v!r} := {t!r}" for v, t in self.items())
        return f"[{inner}]"


EMPTY_SUBST = Substitution()


def apply_subst(t: Term, subst: Substitution) -> Term:
    if isinstance(t.head, Variable):
        image = subst.get(t.head)
        if image is not None:
            return Term(image.head, image.args + tuple(apply_subst(a, subst) for a in t.args))
    return Term(t.head, tuple(apply_subst(a, subst) for a in t.args))


# ---------------------------------------------------------------------------
# Matching (application as binary constructor)


def match(pattern: Term, t: Term, binding: Optional[dict[Variable, Term]] = None) -> Optional[Substitution]:
    """Syntactic matching: the minimal sigma with pattern@sigma = t, or None."""
    b: dict[Variable, Term] = dict(binding) if binding else {}

    def go(p: Term, u: Term) -> bool:
        if p.is_var:
            v = p.head
            if v.typ != u.typ:
                return False
            prev = b.get(v)
            if prev is None:
                b[v] = u
                return True
            return prev == u
        if not p.args:
            # bare function symbol
            return not u.args and p.head == u.head
        if not u.args:
            return False
        p_fun = Term(p.head, p.args[:-1])
        u_fun = Term(u.head, u.args[:-1])
        return go(p.args[-1], u.args[-1]) and go(p_fun, u_fun)

    if pattern.typ != t.typ:
        return None
    if go(pattern, t):
        return Substitution(b)
    return None


# ---------------------------------------------------------------------------
# Unification (syntactic, occurs check, application as binary constructor)


def unify(s: Term, t: Term) -> Optional[Substitution]:
    """Most general unifier of s and t, or None.  The mgu is idempotent."""
    if s.typ != t.typ:
        return None
    subst: dict[Variable, Term] = {}

    def resolve(u: Term) -> Term:
        # follow bindings at the head until stable
        while isinstance(u.head, Variable) and u.head in subst:
            image = subst[u.head]
            u = Term(image.head, image.args + u.args)
        return u

    def occurs(v: Variable, u: Term) -> bool:
        u = resolve(u)
        if isinstance(u.head, Variable):
            if u.head == v:
                return True
        return any(occurs(v, a) for a in u.args)

    def go(a: Term, b: Term) -> bool:
        a, b = resolve(a), resolve(b)
        if a.is_var and b.is_var and a.head == b.head:
            return True
        if a.is_var:
            if occurs(a.head, b):
                return False
            subst[a.head] = b
            return True
        if b.is_var:
            return go(b, a)
        if not a.args and not b.args:
            return a.head == b.head
        if not a.args or not b.args:
            return False
        a_fun = Term(a.head, a.args[:-1])
        b_fun = Term(b.head, b.args[:-1])
        return go(a.args[-1], b.args[-1]) and go(a_fun, b_fun)

    if not go(s, t):
        return None
    # close the bindings into an idempotent substitution
    result = Substitution()
    for v in subst:
        image = var_term(v)
        prev = None
        while prev != image:
            prev = image
            image = apply_subst(image, Substitution(subst))
        result = result.extend(v, image)
    return result


# ---------------------------------------------------------------------------
# Renaming apart


def rename_name(name: str, taken: set[str]) -> str:
    candidate = name
    while candidate in taken:
        candidate += "'"
    return candidate


def renaming_apart(vars_: set[Variable], avoid: set[Variable]) -> Substitution:
    """A renaming of vars_ to fresh variables whose names avoid `avoid`."""
    taken = {v.name for v in avoid}
    mapping: dict[Variable, Term] = {}
    for v in sorted(vars_, key=lambda v: (v.name, v.vid)):
        new_name = rename_name(v.name, taken)
        taken.add(new_name)
        mapping[v] = var_term(fresh_variable(new_name, v.typ))
    return Substitution(mapping)


# ---------------------------------------------------------------------------
# Contexts (hole symbols)


def hole(i: int, typ: SimpleType) -> FunctionSymbol:
    """The reserved hole symbol with index i at the given type."""
    return FunctionSymbol(f"□{i}", typ, "term")


def is_hole(sym: Head) -> bool:
    return isinstance(sym, FunctionSymbol) and sym.name.startswith("□")


def hole_positions(c: Term) -> dict[int, Position]:
    """Positions of hole symbols in a context; errors if some hole repeats."""
    out: dict[int, Position] = {}
    for p in positions(c):
        u = subterm_at(c, p)
        if is_hole(u.head) and not u.args:
            idx = int(u.head.name.lstrip("□"))
            if idx in out:
                raise ValueError(f"hole □{idx} occurs twice")
            out[idx] = p
    return out


def fill(c: Term, *ts: Term) -> Term:
    """Replace each hole □i in the context by ts[i-1] (holes may be applied)."""

    def go(u: Term) -> Term:
        if is_hole(u.head):
            s = ts[int(u.head.name.lstrip("□")) - 1]
            return Term(s.head, s.args + tuple(go(a) for a in u.args))
        return Term(u.head, tuple(go(a) for a in u.args))

    return go(c)
