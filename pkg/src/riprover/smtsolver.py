"""A small SMT-LIB 2 solver for quantifier-free integer/boolean goals.

This runs as a standalone subprocess (``python -m riprover.smtsolver``) and
speaks the SMT-LIB 2 text protocol on stdin/stdout, so it is a drop-in
default for the solver bridge when no external solver (z3, cvc5, ...) is
installed.  It is deliberately self-contained: no imports from the rest of
the package.

Method: negation-free traversal into disjunctive branches of integer
literals, unit propagation of equalities, Fourier-Motzkin over the
rationals for infeasibility, and a bounded search for integer models.
Nonlinear monomials are abstracted as fresh unknowns, which keeps "unsat"
answers sound; "sat" is only reported after re-evaluating the original
assertions under the candidate model.  Anything else is "unknown".
"""

from __future__ import annotations

import sys
from fractions import Fraction


# ---------------------------------------------------------------------------
# S-expression reader


class SexpError(Exception):
    pass


def tokenize(text):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i + 1:j]
            i = j + 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            yield text[i:j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            yield text[i:j]
            i = j


def parse_all(text):
    tokens = list(tokenize(text))
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise SexpError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(parse())
            if pos >= len(tokens):
                raise SexpError("unbalanced parenthesis")
            pos += 1
            return tuple(items)
        if tok == ")":
            raise SexpError("unexpected )")
        return tok

    out = []
    while pos < len(tokens):
        out.append(parse())
    return out


# ---------------------------------------------------------------------------
# Linear forms: dict monomial -> Fraction coefficient, "" -> constant.
# A monomial is a tuple of variable names (sorted, with repetition); the
# empty tuple is the constant slot.  Degree >= 2 monomials are later treated
# as opaque unknowns.

CONST = ()


def lin_const(c):
    return {CONST: Fraction(c)} if c else {}


def lin_var(name):
    return {(name,): Fraction(1)}


def lin_add(a, b):
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, Fraction(0)) + c
        if out[m] == 0:
            del out[m]
    return out


def lin_scale(a, k):
    if k == 0:
        return {}
    return {m: c * k for m, c in a.items()}


def lin_mul(a, b):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(sorted(m1 + m2))
            out[m] = out.get(m, Fraction(0)) + c1 * c2
            if out[m] == 0:
                del out[m]
    return out


# ---------------------------------------------------------------------------
# Formula evaluation (used to re-validate candidate models)


def eval_term(t, env):
    if isinstance(t, str):
        if t == "true":
            return True
        if t == "false":
            return False
        if t.lstrip("-").isdigit():
            return int(t)
        if t in env:
            return env[t]
        raise SexpError(f"unbound symbol {t}")
    head = t[0]
    args = [eval_term(a, env) for a in t[1:]]
    if head == "+":
        out = 0
        for a in args:
            out += a
        return out
    if head == "-":
        return -args[0] if len(args) == 1 else args[0] - sum(args[1:])
    if head == "*":
        out = 1
        for a in args:
            out *= a
        return out
    if head == "div":
        return args[0] // args[1]
    if head == "mod":
        return args[0] % args[1]
    if head == "<":
        return args[0] < args[1]
    if head == "<=":
        return args[0] <= args[1]
    if head == ">":
        return args[0] > args[1]
    if head == ">=":
        return args[0] >= args[1]
    if head == "=":
        return all(a == args[0] for a in args[1:])
    if head == "distinct":
        return len(set(args)) == len(args)
    if head == "and":
        return all(args)
    if head == "or":
        return any(args)
    if head == "not":
        return not args[0]
    if head == "=>":
        out = args[-1]
        for a in reversed(args[:-1]):
            out = (not a) or out
        return out
    if head == "xor":
        return args[0] != args[1]
    if head == "ite":
        return args[1] if args[0] else args[2]
    raise SexpError(f"cannot evaluate {head}")


# ---------------------------------------------------------------------------
# Solver core


class Budget:
    def __init__(self, steps):
        self.steps = steps

    def spend(self, k=1):
        self.steps -= k
        return self.steps >= 0


class Solver:
    def __init__(self):
        self.reset()

    def reset(self):
        self.decls = {}  # name -> "Int" | "Bool"
        self.assertions = []
        self.stack = []
        self.last_model = None

    # -- integer translation -------------------------------------------------

    def term_sort(self, t):
        if isinstance(t, str):
            if t in ("true", "false"):
                return "Bool"
            if t.lstrip("-").isdigit():
                return "Int"
            return self.decls.get(t, "Int")
        head = t[0]
        if head in ("+", "-", "*", "div", "mod"):
            return "Int"
        if head == "ite":
            return self.term_sort(t[1 + 1])
        return "Bool"

    def to_linear(self, t, splits):
        """Translate an integer term to a linear form; records ite splits."""
        if isinstance(t, str):
            if t.lstrip("-").isdigit():
                return lin_const(int(t))
            return lin_var(t)
        head = t[0]
        if head == "+":
            out = {}
            for a in t[1:]:
                out = lin_add(out, self.to_linear(a, splits))
            return out
        if head == "-":
            if len(t) == 2:
                return lin_scale(self.to_linear(t[1], splits), Fraction(-1))
            out = self.to_linear(t[1], splits)
            for a in t[2:]:
                out = lin_add(out, lin_scale(self.to_linear(a, splits), Fraction(-1)))
            return out
        if head == "*":
            out = lin_const(1)
            for a in t[1:]:
                out = lin_mul(out, self.to_linear(a, splits))
            return out
        if head == "ite":
            # handled by formula-level lifting before translation
            raise SexpError("unlifted ite")
        if head in ("div", "mod"):
            # abstract as an opaque monomial; model re-validation keeps us honest
            return {("@div:" + render(t),): Fraction(1)}
        raise SexpError(f"not an integer term: {head}")

    # -- formula to branch enumeration ---------------------------------------

    def lift_ites(self, t):
        """Pull integer-level ite up to formula level: returns list of (cond-list, term)."""
        if isinstance(t, str):
            return [([], t)]
        if t[0] == "ite" and self.term_sort(t) == "Int":
            branches = []
            for conds_c, c in self.lift_ites(t[1]):
                for conds_a, a in self.lift_ites(t[2]):
                    branches.append((conds_c + [c] + conds_a, a))
                for conds_b, b in self.lift_ites(t[3]):
                    branches.append((conds_c + [("not", c)] + conds_b, b))
            return branches
        combos = [([], [t[0]])]
        for arg in t[1:]:
            new_combos = []
            for conds, prefix in combos:
                for conds2, a in self.lift_ites(arg):
                    new_combos.append((conds + conds2, prefix + [a]))
            combos = new_combos
        return [(conds, tuple(prefix)) for conds, prefix in combos]

    def branches(self, formula, polarity, budget):
        """Yield branches: lists of literals. A literal is
        ("bool", name, bool) or ("ge", linform) or ("eq", linform)."""
        if not budget.spend():
            raise TimeoutError
        t = formula
        if isinstance(t, str):
            if t == "true":
                if polarity:
                    yield []
                return
            if t == "false":
                if not polarity:
                    yield []
                return
            yield [("bool", t, polarity)]
            return
        head = t[0]
        if head == "not":
            yield from self.branches(t[1], not polarity, budget)
            return
        if head == "=>":
            rest = t[-1]
            for a in reversed(t[1:-1]):
                rest = ("or", ("not", a), rest)
            yield from self.branches(rest, polarity, budget)
            return
        if head == "ite" and self.term_sort(t) == "Bool":
            expanded = ("or", ("and", t[1], t[2]), ("and", ("not", t[1]), t[3]))
            yield from self.branches(expanded, polarity, budget)
            return
        if head == "xor":
            expanded = ("or", ("and", t[1], ("not", t[2])), ("and", ("not", t[1]), t[2]))
            yield from self.branches(expanded, polarity, budget)
            return
        if (head == "and" and polarity) or (head == "or" and not polarity):
            parts = [list(self.branches(a, polarity, budget)) for a in t[1:]]
            def product(idx, acc):
                if idx == len(parts):
                    yield acc
                    return
                for b in parts[idx]:
                    yield from product(idx + 1, acc + b)
            yield from product(0, [])
            return
        if (head == "or" and polarity) or (head == "and" and not polarity):
            for a in t[1:]:
                yield from self.branches(a, polarity, budget)
            return
        if head == "=" and self.term_sort(t[1]) == "Bool":
            expanded = ("or", ("and", t[1], t[2]), ("and", ("not", t[1]), ("not", t[2])))
            yield from self.branches(expanded, polarity, budget)
            return
        if head in ("<", "<=", ">", ">=", "=", "distinct"):
            yield from self.atom_branches(t, polarity, budget)
            return
        raise SexpError(f"cannot handle formula head {head}")

    def atom_branches(self, atom, polarity, budget):
        head = atom[0]
        if head == "distinct":
            atom = ("=", atom[1], atom[2])
            polarity = not polarity
            head = "="
        for conds, lifted in self.lift_ites(atom):
            a = self.to_linear(lifted[1], None)
            b = self.to_linear(lifted[2], None)
            diff = lin_add(a, lin_scale(b, Fraction(-1)))  # a - b
            lits = []
            # integer literals for a ? b
            if head == "=":
                core = [[("eq", diff)]] if polarity else [
                    [("ge", lin_add(diff, lin_const(-1)))],               # a - b >= 1
                    [("ge", lin_add(lin_scale(diff, Fraction(-1)), lin_const(-1)))],  # b - a >= 1
                ]
            else:
                if head == "<":
                    ge, strict = lin_scale(diff, Fraction(-1)), True   # b - a > 0
                elif head == "<=":
                    ge, strict = lin_scale(diff, Fraction(-1)), False
                elif head == ">":
                    ge, strict = diff, True
                else:
                    ge, strict = diff, False
                if not polarity:
                    # not (x >= 0) == -x >= 1 ; not (x >= 1) == -x >= 0
                    ge, strict = lin_scale(ge, Fraction(-1)), not strict
                if strict:
                    ge = lin_add(ge, lin_const(-1))
                core = [[("ge", ge)]]
            for c in core:
                if conds:
                    cond_formula = ("and",) + tuple(conds)
                    for cb in self.branches(cond_formula, True, budget):
                        yield cb + c
                else:
                    yield c

    # -- conjunction solving --------------------------------------------------

    def solve_branch(self, lits, budget):
        """Returns ("sat", env) / ("unsat", None) / ("unknown", None)."""
        bools = {}
        eqs, ges = [], []
        for lit in lits:
            if lit[0] == "bool":
                _, name, val = lit
                if bools.get(name, val) != val:
                    return ("unsat", None)
                bools[name] = val
            elif lit[0] == "eq":
                eqs.append(dict(lit[1]))
            else:
                ges.append(dict(lit[1]))

        # substitution of equalities with a unit-coefficient monomial
        assign = {}

        def substitute(form, mono, repl):
            if mono not in form:
                return form
            coeff = form.pop(mono)
            return lin_add(form, lin_scale(repl, coeff))

        changed = True
        while changed:
            changed = False
            for i, eq in enumerate(eqs):
                units = [m for m, c in eq.items() if m != CONST and abs(c) == 1 and len(m) == 1]
                if not units:
                    continue
                mono = units[0]
                coeff = eq[mono]
                rest = {m: c for m, c in eq.items() if m != mono}
                repl = lin_scale(rest, Fraction(-1) / coeff)
                eqs.pop(i)
                eqs = [substitute(dict(e), mono, repl) for e in eqs]
                ges = [substitute(dict(g), mono, repl) for g in ges]
                assign = {v: substitute(dict(f), mono, repl) for v, f in assign.items()}
                assign[mono[0]] = repl
                changed = True
                break

        for eq in eqs:
            ges.append(dict(eq))
            ges.append(lin_scale(eq, Fraction(-1)))

        status, model = self.solve_inequalities(ges, budget)
        if status != "sat":
            return (status, None)
        env = {name: val for name, val in bools.items()}
        for mono_vars, val in model.items():
            env[mono_vars] = val
        # back-substitute eliminated variables; anything the inequalities left
        # unconstrained defaults to 0 (model completion)
        def value_of(name):
            if name not in env or not isinstance(env[name], int):
                env[name] = 0
            return env[name]

        for var in list(assign):
            form = assign[var]
            total = Fraction(0)
            for m, c in form.items():
                if m == CONST:
                    total += c
                else:
                    prod = 1
                    for v in m:
                        prod *= value_of(v)
                    total += c * prod
            if total.denominator == 1:
                env[var] = int(total)
            else:
                return ("unknown", None)
        return ("sat", env)

    def solve_inequalities(self, ges, budget):
        """ges: linear forms required >= 0 (monomials treated as unknowns)."""
        ges = [g for g in ges if g]
        for g in list(ges):
            if set(g) == {CONST}:
                if g[CONST] < 0:
                    return ("unsat", None)
                ges.remove(g)
        monos = sorted({m for g in ges for m in g if m != CONST})
        if not self.fm_feasible([dict(g) for g in ges], list(monos), budget):
            return ("unsat", None)
        # bounded search for an integer model over the monomial unknowns
        for width in (4, 16, 64):
            found = self.int_search([dict(g) for g in ges], list(monos), {}, width, budget)
            if found is not None:
                env = {}
                for m, v in found.items():
                    if len(m) == 1:
                        env[m[0]] = v
                # completion: unmentioned unknowns default 0 handled by caller
                return ("sat", env)
        return ("unknown", None)

    def fm_feasible(self, ges, monos, budget):
        """Rational feasibility by Fourier-Motzkin elimination."""
        while monos:
            if not budget.spend():
                raise TimeoutError
            mono = min(
                monos,
                key=lambda m: sum(1 for g in ges if m in g and g[m] > 0)
                * sum(1 for g in ges if m in g and g[m] < 0),
            )
            monos.remove(mono)
            uppers, lowers, rest = [], [], []
            for g in ges:
                c = g.get(mono, Fraction(0))
                if c > 0:
                    lowers.append(g)
                elif c < 0:
                    uppers.append(g)
                else:
                    rest.append(g)
            for lo in lowers:
                for up in uppers:
                    # lo: c1*x + r1 >= 0 (c1>0)  =>  x >= -r1/c1
                    # up: c2*x + r2 >= 0 (c2<0)  =>  x <= -r2/c2... combine
                    c1, c2 = lo[mono], up[mono]
                    combined = lin_add(
                        lin_scale({m: c for m, c in lo.items() if m != mono}, -c2),
                        lin_scale({m: c for m, c in up.items() if m != mono}, c1),
                    )
                    if set(combined) <= {CONST}:
                        if combined.get(CONST, Fraction(0)) < 0:
                            return False
                    else:
                        rest.append(combined)
            ges = rest
            if len(ges) > 400:
                ges = ges[:400]  # degrade to incompleteness, stay sound for sat
        for g in ges:
            if set(g) <= {CONST} and g.get(CONST, Fraction(0)) < 0:
                return False
        return True

    def int_search(self, ges, monos, acc, width, budget):
        while True:
            if not budget.spend():
                raise TimeoutError
            ges = [g for g in ges if g]
            for g in ges:
                if set(g) <= {CONST}:
                    if g[CONST] < 0:
                        return None
            ges = [g for g in ges if set(g) != {CONST} and g]
            if not monos:
                for g in ges:
                    if g.get(CONST, Fraction(0)) < 0:
                        return None
                return acc
            # tighten single-unknown constraints into bounds
            bounds = {m: [None, None] for m in monos}
            for g in ges:
                vs = [m for m in g if m != CONST]
                if len(vs) == 1:
                    m = vs[0]
                    c = g[m]
                    k = -g.get(CONST, Fraction(0)) / c
                    if c > 0:  # x >= k
                        lo = bounds[m][0]
                        bounds[m][0] = k if lo is None else max(lo, k)
                    else:  # x <= k
                        hi = bounds[m][1]
                        bounds[m][1] = k if hi is None else min(hi, k)
            progressed = False
            for m, (lo, hi) in bounds.items():
                if lo is not None and hi is not None and lo > hi:
                    return None
                if lo is not None and hi is not None and lo == hi and lo.denominator == 1:
                    val = int(lo)
                    acc = dict(acc)
                    acc[m] = val
                    monos = [x for x in monos if x != m]
                    ges = [self._plug(g, m, val) for g in ges]
                    progressed = True
                    break
            if progressed:
                continue
            # choose the unknown with the tightest bound info
            def key(m):
                lo, hi = bounds[m]
                if lo is not None and hi is not None:
                    return (0, hi - lo)
                if lo is not None or hi is not None:
                    return (1, 0)
                return (2, 0)
            m = min(monos, key=key)
            lo, hi = bounds[m]
            candidates = []
            import math
            if lo is not None and hi is not None:
                lo_i, hi_i = math.ceil(lo), math.floor(hi)
                span = range(lo_i, min(hi_i, lo_i + width) + 1)
                candidates = list(span)
            elif lo is not None:
                lo_i = math.ceil(lo)
                candidates = list(range(lo_i, lo_i + width + 1))
            elif hi is not None:
                hi_i = math.floor(hi)
                candidates = list(range(hi_i, hi_i - width - 1, -1))
            else:
                candidates = [0]
                for k in range(1, width + 1):
                    candidates += [k, -k]
            candidates.sort(key=lambda v: (abs(v), v < 0))
            rest_monos = [x for x in monos if x != m]
            for val in candidates:
                sub = self.int_search([self._plug(dict(g), m, val) for g in ges], list(rest_monos), {**acc, m: val}, width, budget)
                if sub is not None:
                    return sub
            return None

    @staticmethod
    def _plug(g, mono, val):
        if mono not in g:
            return g
        g = dict(g)
        c = g.pop(mono)
        g[CONST] = g.get(CONST, Fraction(0)) + c * val
        if g[CONST] == 0 and len(g) > 1:
            del g[CONST]
        return g

    # -- toplevel -------------------------------------------------------------

    def check_sat(self):
        budget = Budget(2_000_000)
        formula = ("and",) + tuple(self.assertions) if self.assertions else "true"
        try:
            sat_unknown = False
            for branch in self.branches(formula, True, budget):
                status, env = self.solve_branch(branch, budget)
                if status == "sat":
                    model = self.complete_model(env)
                    if self.validate(model):
                        self.last_model = model
                        return "sat"
                    sat_unknown = True
                elif status == "unknown":
                    sat_unknown = True
            if sat_unknown:
                model = self.brute_force()
                if model is not None:
                    self.last_model = model
                    return "sat"
            return "unknown" if sat_unknown else "unsat"
        except TimeoutError:
            return "unknown"
        except (SexpError, OverflowError, ZeroDivisionError):
            return "unknown"

    def brute_force(self, width=10, cap=400_000):
        """Last resort for branches with abstracted nonlinearities: search
        small assignments directly against the original assertions."""
        int_vars = sorted(n for n, s in self.decls.items() if s != "Bool")
        bool_vars = sorted(n for n, s in self.decls.items() if s == "Bool")
        if len(int_vars) > 4 or len(bool_vars) > 6:
            return None
        values = [0]
        for k in range(1, width + 1):
            values += [k, -k]
        tried = 0
        import itertools as it

        for bools in it.product((False, True), repeat=len(bool_vars)):
            for ints in it.product(values, repeat=len(int_vars)):
                tried += 1
                if tried > cap:
                    return None
                model = dict(zip(bool_vars, bools))
                model.update(zip(int_vars, ints))
                if self.validate(model):
                    return self.complete_model(model)
        return None

    def complete_model(self, env):
        model = {}
        for name, sort in self.decls.items():
            if name in env:
                model[name] = env[name]
            else:
                model[name] = False if sort == "Bool" else 0
        return model

    def validate(self, model):
        try:
            return all(eval_term(a, dict(model)) is True for a in self.assertions)
        except SexpError:
            return False

    def model_sexp(self):
        parts = []
        for name in sorted(self.decls):
            sort = self.decls[name]
            val = (self.last_model or {}).get(name, False if sort == "Bool" else 0)
            if sort == "Bool":
                rendered = "true" if val else "false"
            else:
                rendered = str(val) if val >= 0 else f"(- {-val})"
            parts.append(f"(define-fun {name} () {sort} {rendered})")
        return "(model " + " ".join(parts) + ")"


def render(t):
    if isinstance(t, str):
        return t
    return "(" + " ".join(render(a) for a in t) + ")"


# ---------------------------------------------------------------------------
# Protocol loop


def run(instream=None, outstream=None):
    instream = instream or sys.stdin
    outstream = outstream or sys.stdout
    solver = Solver()
    buffer = ""
    depth = 0
    for line in instream:
        buffer += line
        depth += line.count("(") - line.count(")")
        if depth > 0 or not buffer.strip():
            continue
        try:
            commands = parse_all(buffer)
        except SexpError:
            buffer = ""
            depth = 0
            continue
        buffer = ""
        depth = 0
        for cmd in commands:
            if not isinstance(cmd, tuple) or not cmd:
                continue
            head = cmd[0]
            if head == "exit":
                return
            elif head == "reset":
                solver.reset()
            elif head in ("set-logic", "set-option", "set-info"):
                pass
            elif head in ("declare-fun", "declare-const"):
                name = cmd[1]
                sort = cmd[-1]
                solver.decls[name] = "Bool" if sort == "Bool" else "Int"
            elif head == "assert":
                solver.assertions.append(cmd[1])
            elif head == "push":
                solver.stack.append((dict(solver.decls), list(solver.assertions)))
            elif head == "pop":
                if solver.stack:
                    solver.decls, solver.assertions = solver.stack.pop()
            elif head == "check-sat":
                outstream.write(solver.check_sat() + "\n")
                outstream.flush()
            elif head == "get-model":
                outstream.write(solver.model_sexp() + "\n")
                outstream.flush()
            elif head == "echo":
                outstream.write(str(cmd[1]).strip('"') + "\n")
                outstream.flush()
            else:
                pass


if __name__ == "__main__":
    run()
