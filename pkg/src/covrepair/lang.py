"""Generator terms in monadic normal form.

Operator and function applications appear only on the right of a let
binding and take value arguments (variables or constants).  Match
scrutinees are values.  Nondeterministic choice keeps a surface Choice
node; desugar_choice rewrites it into the core nat_gen coin toss.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import logic as L
from .typesys import CoverageType, RefinementType
from .values import BaseType, NAT, base_of_value, show_value


class LangError(Exception):
    pass


class MissingPatch(LangError):
    pass


# -- term nodes -------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: object


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Err:
    pass


ERR = Err()


@dataclass(frozen=True)
class Hole:
    hid: int
    ctype: CoverageType


@dataclass(frozen=True)
class Let:
    name: str
    bound: object
    body: object


@dataclass(frozen=True)
class LetOp:
    """let name = op(args...) in body; args are values."""

    name: str
    op: str
    args: tuple
    body: object

    def __init__(self, name, op, args, body):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", tuple(args))
        object.__setattr__(self, "body", body)


@dataclass(frozen=True)
class LetApp:
    """let name = fn(args...) in body; fn is a generator name in scope."""

    name: str
    fn: str
    args: tuple
    body: object

    def __init__(self, name, fn, args, body):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "args", tuple(args))
        object.__setattr__(self, "body", body)


@dataclass(frozen=True)
class PatCon:
    """Constructor pattern: Nil, Cons, Leaf, Node."""

    con: str


@dataclass(frozen=True)
class PatLit:
    value: object


@dataclass(frozen=True)
class PatWild:
    pass


@dataclass(frozen=True)
class Branch:
    pattern: object
    binders: tuple
    body: object

    def __init__(self, pattern, binders, body):
        object.__setattr__(self, "pattern", pattern)
        object.__setattr__(self, "binders", tuple(binders))
        object.__setattr__(self, "body", body)


@dataclass(frozen=True)
class Match:
    scrutinee: object  # a value term
    branches: tuple

    def __init__(self, scrutinee, branches):
        object.__setattr__(self, "scrutinee", scrutinee)
        object.__setattr__(self, "branches", tuple(branches))


@dataclass(frozen=True)
class Choice:
    left: object
    right: object


@dataclass(frozen=True)
class GeneratorDef:
    name: str
    params: tuple  # of (name, RefinementType)
    ret: CoverageType
    body: object
    rec: bool = True

    def __init__(self, name, params, ret, body, rec=True):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "ret", ret)
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "rec", rec)


def is_value(t) -> bool:
    return isinstance(t, (Const, Var))


class NameSupply:
    """Monotonic fresh-name counter with the _v prefix."""

    def __init__(self, start: int = 0):
        self.next_index = start

    def fresh(self) -> str:
        n = f"_v{self.next_index}"
        self.next_index += 1
        return n


def max_fresh_index(t) -> int:
    """1 + the largest _vK index appearing anywhere in t (0 if none)."""
    best = 0
    for name in _all_names(t):
        if name.startswith("_v") and name[2:].isdigit():
            best = max(best, int(name[2:]) + 1)
    return best


def _all_names(t):
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, Let):
        yield t.name
        yield from _all_names(t.bound)
        yield from _all_names(t.body)
    elif isinstance(t, LetOp):
        yield t.name
        for a in t.args:
            yield from _all_names(a)
        yield from _all_names(t.body)
    elif isinstance(t, LetApp):
        yield t.name
        for a in t.args:
            yield from _all_names(a)
        yield from _all_names(t.body)
    elif isinstance(t, Match):
        yield from _all_names(t.scrutinee)
        for br in t.branches:
            yield from br.binders
            yield from _all_names(br.body)
    elif isinstance(t, Choice):
        yield from _all_names(t.left)
        yield from _all_names(t.right)


def free_term_vars(t) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, (Const, Err)):
        return frozenset()
    if isinstance(t, Hole):
        return L.free_vars(t.ctype.qual) - {t.ctype.bound}
    if isinstance(t, Let):
        return free_term_vars(t.bound) | (free_term_vars(t.body) - {t.name})
    if isinstance(t, LetOp):
        out = frozenset()
        for a in t.args:
            out |= free_term_vars(a)
        return out | (free_term_vars(t.body) - {t.name})
    if isinstance(t, LetApp):
        out = frozenset((t.fn,))
        for a in t.args:
            out |= free_term_vars(a)
        return out | (free_term_vars(t.body) - {t.name})
    if isinstance(t, Match):
        out = free_term_vars(t.scrutinee)
        for br in t.branches:
            out |= free_term_vars(br.body) - set(br.binders)
        return out
    if isinstance(t, Choice):
        return free_term_vars(t.left) | free_term_vars(t.right)
    raise LangError(f"not a term: {t!r}")


def term_size(t) -> int:
    """AST node count; holes and err count as one node each."""
    if isinstance(t, (Const, Var, Err, Hole)):
        return 1
    if isinstance(t, Let):
        return 1 + term_size(t.bound) + term_size(t.body)
    if isinstance(t, (LetOp, LetApp)):
        return 1 + sum(term_size(a) for a in t.args) + term_size(t.body)
    if isinstance(t, Match):
        return 1 + term_size(t.scrutinee) + sum(term_size(b.body) for b in t.branches)
    if isinstance(t, Choice):
        return 1 + term_size(t.left) + term_size(t.right)
    raise LangError(f"not a term: {t!r}")


def hole_ids(t) -> list:
    """Hole ids in program (left-to-right) order."""
    out = []

    def walk(s):
        if isinstance(s, Hole):
            out.append(s.hid)
        elif isinstance(s, Let):
            walk(s.bound)
            walk(s.body)
        elif isinstance(s, (LetOp, LetApp)):
            walk(s.body)
        elif isinstance(s, Match):
            for br in s.branches:
                walk(br.body)
        elif isinstance(s, Choice):
            walk(s.left)
            walk(s.right)

    walk(t)
    return out


def map_holes(t, f):
    """Rebuild t with every Hole node replaced by f(hole)."""
    if isinstance(t, Hole):
        return f(t)
    if isinstance(t, (Const, Var, Err)):
        return t
    if isinstance(t, Let):
        return Let(t.name, map_holes(t.bound, f), map_holes(t.body, f))
    if isinstance(t, LetOp):
        return LetOp(t.name, t.op, t.args, map_holes(t.body, f))
    if isinstance(t, LetApp):
        return LetApp(t.name, t.fn, t.args, map_holes(t.body, f))
    if isinstance(t, Match):
        return Match(
            t.scrutinee,
            tuple(Branch(b.pattern, b.binders, map_holes(b.body, f)) for b in t.branches),
        )
    if isinstance(t, Choice):
        return Choice(map_holes(t.left, f), map_holes(t.right, f))
    raise LangError(f"not a term: {t!r}")


def fill_holes(t, patches: dict):
    """Replace each hole by patches[hid]; every hole must have a patch."""

    def repl(h):
        if h.hid not in patches:
            raise MissingPatch(f"no patch for hole ??{h.hid}")
        p = patches[h.hid]
        if isinstance(p, Err) or hole_ids(p):
            raise MissingPatch(f"patch for ??{h.hid} must be hole- and err-free")
        return p

    return map_holes(t, repl)


def fill_holes_partial(t, patches: dict):
    """Internal variant: unfilled holes become err (coverage bottom)."""
    return map_holes(t, lambda h: patches.get(h.hid, ERR))


def simplify_choice_err(t):
    """Drop err arms of surface choices: e (+) err becomes e."""
    if isinstance(t, (Const, Var, Err, Hole)):
        return t
    if isinstance(t, Let):
        return Let(t.name, simplify_choice_err(t.bound), simplify_choice_err(t.body))
    if isinstance(t, LetOp):
        return LetOp(t.name, t.op, t.args, simplify_choice_err(t.body))
    if isinstance(t, LetApp):
        return LetApp(t.name, t.fn, t.args, simplify_choice_err(t.body))
    if isinstance(t, Match):
        return Match(
            t.scrutinee,
            tuple(
                Branch(b.pattern, b.binders, simplify_choice_err(b.body))
                for b in t.branches
            ),
        )
    if isinstance(t, Choice):
        a = simplify_choice_err(t.left)
        b = simplify_choice_err(t.right)
        if isinstance(a, Err):
            return b
        if isinstance(b, Err):
            return a
        return Choice(a, b)
    raise LangError(f"not a term: {t!r}")


def desugar_choice(t, supply: NameSupply | None = None):
    """Rewrite every surface choice into the core coin toss:

        let k = nat_gen() in let m = k mod 2 in
        match m with 0 -> left | _ -> right
    """
    if supply is None:
        supply = NameSupply(max_fresh_index(t))
    if isinstance(t, (Const, Var, Err, Hole)):
        return t
    if isinstance(t, Let):
        return Let(t.name, desugar_choice(t.bound, supply), desugar_choice(t.body, supply))
    if isinstance(t, LetOp):
        return LetOp(t.name, t.op, t.args, desugar_choice(t.body, supply))
    if isinstance(t, LetApp):
        return LetApp(t.name, t.fn, t.args, desugar_choice(t.body, supply))
    if isinstance(t, Match):
        return Match(
            t.scrutinee,
            tuple(
                Branch(b.pattern, b.binders, desugar_choice(b.body, supply))
                for b in t.branches
            ),
        )
    if isinstance(t, Choice):
        left = desugar_choice(t.left, supply)
        right = desugar_choice(t.right, supply)
        k = supply.fresh()
        m = supply.fresh()
        return LetOp(
            k,
            "nat_gen",
            (),
            LetOp(
                m,
                "mod",
                (Var(k), Const(2)),
                Match(
                    Var(m),
                    (
                        Branch(PatLit(0), (), left),
                        Branch(PatWild(), (), right),
                    ),
                ),
            ),
        )
    raise LangError(f"not a term: {t!r}")


# -- alpha equivalence -------------------------------------------------------


def alpha_equiv(a, b) -> bool:
    return _alpha(a, b, {}, {})


def _alpha_prop(p, q, env_a, env_b) -> bool:
    ra = L.subst(p, {k: L.Var(v) for k, v in env_a.items()})
    rb = L.subst(q, {k: L.Var(v) for k, v in env_b.items()})
    return ra == rb


def _alpha_ctype(ta, tb, env_a, env_b) -> bool:
    if ta.base != tb.base:
        return False
    ea = dict(env_a)
    eb = dict(env_b)
    ea[ta.bound] = eb[tb.bound] = "$b"
    return _alpha_prop(ta.qual, tb.qual, ea, eb)


def _alpha(a, b, env_a, env_b) -> bool:
    if isinstance(a, Var) and isinstance(b, Var):
        return env_a.get(a.name, a.name) == env_b.get(b.name, b.name)
    if type(a) is not type(b):
        return False
    if isinstance(a, Const):
        return a.value == b.value
    if isinstance(a, Err):
        return True
    if isinstance(a, Hole):
        return a.hid == b.hid and _alpha_ctype(a.ctype, b.ctype, env_a, env_b)
    if isinstance(a, Let):
        if not _alpha(a.bound, b.bound, env_a, env_b):
            return False
        fresh = f"$l{len(env_a)}"
        return _alpha(a.body, b.body, {**env_a, a.name: fresh}, {**env_b, b.name: fresh})
    if isinstance(a, (LetOp, LetApp)):
        head_a = a.op if isinstance(a, LetOp) else env_a.get(a.fn, a.fn)
        head_b = b.op if isinstance(b, LetOp) else env_b.get(b.fn, b.fn)
        if head_a != head_b or len(a.args) != len(b.args):
            return False
        if not all(_alpha(x, y, env_a, env_b) for x, y in zip(a.args, b.args)):
            return False
        fresh = f"$l{len(env_a)}"
        return _alpha(a.body, b.body, {**env_a, a.name: fresh}, {**env_b, b.name: fresh})
    if isinstance(a, Match):
        if len(a.branches) != len(b.branches):
            return False
        if not _alpha(a.scrutinee, b.scrutinee, env_a, env_b):
            return False
        for ba, bb in zip(a.branches, b.branches):
            if ba.pattern != bb.pattern or len(ba.binders) != len(bb.binders):
                return False
            ea = dict(env_a)
            eb = dict(env_b)
            for i, (x, y) in enumerate(zip(ba.binders, bb.binders)):
                ea[x] = eb[y] = f"$m{len(env_a)}_{i}"
            if not _alpha(ba.body, bb.body, ea, eb):
                return False
        return True
    if isinstance(a, Choice):
        return _alpha(a.left, b.left, env_a, env_b) and _alpha(
            a.right, b.right, env_a, env_b
        )
    raise LangError(f"not a term: {a!r}")


# -- pretty printing ---------------------------------------------------------


def _show_value_term(t) -> str:
    if isinstance(t, Const):
        return show_value(t.value)
    if isinstance(t, Var):
        return t.name
    raise LangError(f"not a value term: {t!r}")


def _show_pattern(p, binders) -> str:
    if isinstance(p, PatWild):
        return "_"
    if isinstance(p, PatLit):
        return show_value(p.value)
    if isinstance(p, PatCon):
        if p.con == "Nil":
            return "[]"
        if p.con == "Cons":
            return f"{binders[0]} :: {binders[1]}"
        if p.con == "Leaf":
            return "Leaf"
        return f"{p.con}({', '.join(binders)})"
    raise LangError(f"not a pattern: {p!r}")


def pretty(t, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(t, (Const, Var)):
        return pad + _show_value_term(t)
    if isinstance(t, Err):
        return pad + "err"
    if isinstance(t, Hole):
        return pad + f"??{t.hid} : {t.ctype}"
    if isinstance(t, Let):
        bound = pretty(t.bound, 0)
        if "\n" in bound:
            return f"{pad}let {t.name} =\n{pretty(t.bound, indent + 1)}\n{pad}in\n{pretty(t.body, indent)}"
        return f"{pad}let {t.name} = {bound} in\n{pretty(t.body, indent)}"
    if isinstance(t, LetOp):
        rhs = _show_op_app(t.op, t.args)
        return f"{pad}let {t.name} = {rhs} in\n{pretty(t.body, indent)}"
    if isinstance(t, LetApp):
        args = " ".join(_atom(_show_value_term(a)) for a in t.args)
        return f"{pad}let {t.name} = {t.fn} {args if args else '()'} in\n{pretty(t.body, indent)}"
    if isinstance(t, Match):
        lines = [f"{pad}match {_show_value_term(t.scrutinee)} with"]
        for br in t.branches:
            lines.append(f"{pad}| {_show_pattern(br.pattern, br.binders)} ->")
            lines.append(pretty(br.body, indent + 1))
        return "\n".join(lines)
    if isinstance(t, Choice):
        left = pretty(t.left, 0)
        right = pretty(t.right, 0)
        if "\n" not in left and "\n" not in right:
            return f"{pad}{_paren_ml(left)} (+) {_paren_ml(right)}"
        return f"{pad}(\n{pretty(t.left, indent + 1)}\n{pad}) (+) (\n{pretty(t.right, indent + 1)}\n{pad})"
    raise LangError(f"not a term: {t!r}")


_INFIX_OPS = {"+", "-", "*", "mod", "==", "!=", "<", "<=", ">", ">=", "++"}


def _show_op_app(op, args) -> str:
    if op == "Cons":
        return f"{_show_value_term(args[0])} :: {_atom(_show_value_term(args[1]))}"
    if op in _INFIX_OPS and len(args) == 2:
        return f"{_show_value_term(args[0])} {op} {_show_value_term(args[1])}"
    if not args:
        return f"{op} ()"
    inner = ", ".join(_show_value_term(a) for a in args)
    return f"{op}({inner})"


def _atom(s: str) -> str:
    if s and (s[0].isalnum() or s[0] in "([_-" or s in ("()", "[]", "true", "false")):
        if " " in s and not (s.startswith("(") or s.startswith("[")):
            return f"({s})"
        return s
    return f"({s})"


def _paren_ml(s: str) -> str:
    return f"({s})" if " (+) " in s or s.startswith("let") or s.startswith("match") else s


def pretty_def(d: GeneratorDef) -> str:
    rec = "rec " if d.rec else ""
    ps = " ".join(f"({n} : {t})" for n, t in d.params)
    return f"let {rec}{d.name} {ps} : {d.ret} =\n{pretty(d.body, 1)}"
