"""First-order qualifiers over finite carriers.

Qualifiers mix boolean connectives, bounded quantifiers, arithmetic
operators, and a registry of executable method predicates (len, sorted,
depth, ...).  Validity is decided by enumeration over a Universe, with a
witness-pinning shortcut for equality-defined quantified variables.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .values import (
    LEAF,
    BaseType,
    Leaf,
    Node,
    UNIT,
    Universe,
    in_universe,
    is_tree,
    show_value,
    tree_depth,
    tree_values,
    universe_values,
)


class LogicError(Exception):
    pass


class UnknownPredicate(LogicError):
    pass


class UnboundVariable(LogicError):
    pass


# ---------------------------------------------------------------------------
# Proposition AST.  Terms and formulas share one node language; a formula is
# any bool-valued node.


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    op: str
    args: tuple

    def __init__(self, op, args):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class And:
    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Forall:
    var: str
    base: BaseType
    body: object


@dataclass(frozen=True)
class Exists:
    var: str
    base: BaseType
    body: object


TRUE = Lit(True)
FALSE = Lit(False)

Prop = object  # documentation alias


def conj(parts) -> Prop:
    """Flattening conjunction; drops trivial truths, absorbs falsehood."""
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        elif p == TRUE:
            continue
        elif p == FALSE:
            return FALSE
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(flat)


def disj(parts) -> Prop:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        elif p == FALSE:
            continue
        elif p == TRUE:
            return TRUE
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(flat)


_COMPARISON_FLIP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">", "==": "!=", "!=": "=="}


def neg(p: Prop) -> Prop:
    """Negation that keeps comparisons readable: not (a < b) becomes b <= a."""
    if isinstance(p, Not):
        return p.body
    if p == TRUE:
        return FALSE
    if p == FALSE:
        return TRUE
    if isinstance(p, App) and p.op in _COMPARISON_FLIP and len(p.args) == 2:
        a, b = p.args
        if p.op in ("==", "!="):
            return App(_COMPARISON_FLIP[p.op], (a, b))
        return App(_COMPARISON_FLIP[p.op], (b, a))
    return Not(p)


def eq(a, b) -> Prop:
    return App("==", (a, b))


def exists_q(var: str, base, body: Prop) -> Prop:
    """Existential that hoists conjuncts not mentioning the binder.

    Keeps quantifier scopes minimal, which both reads better and spares
    the evaluator pointless witness searches.  The binder itself is kept
    even when nothing mentions it: its domain could be empty (nat under
    an all-negative int range), so dropping it would change meaning.
    """
    parts = body.parts if isinstance(body, And) else (body,)
    ins, outs = [], []
    for p in parts:
        (ins if var in free_vars(p) else outs).append(p)
    if not outs:
        return Exists(var, base, body)
    return conj(outs + [Exists(var, base, conj(ins))])


@lru_cache(maxsize=None)
def has_quantifier(p: Prop) -> bool:
    if isinstance(p, (Lit, Var, App)):
        return False
    if isinstance(p, Not):
        return has_quantifier(p.body)
    if isinstance(p, (And, Or)):
        return any(has_quantifier(a) for a in p.parts)
    if isinstance(p, Implies):
        return has_quantifier(p.lhs) or has_quantifier(p.rhs)
    if isinstance(p, (Forall, Exists)):
        return True
    raise LogicError(f"not a proposition: {p!r}")


@lru_cache(maxsize=None)
def prop_size(p: Prop) -> int:
    if isinstance(p, (Lit, Var)):
        return 1
    if isinstance(p, App):
        return 1 + sum(prop_size(a) for a in p.args)
    if isinstance(p, Not):
        return 1 + prop_size(p.body)
    if isinstance(p, (And, Or)):
        return 1 + sum(prop_size(a) for a in p.parts)
    if isinstance(p, Implies):
        return 1 + prop_size(p.lhs) + prop_size(p.rhs)
    if isinstance(p, (Forall, Exists)):
        return 1 + prop_size(p.body)
    raise LogicError(f"not a proposition: {p!r}")


@lru_cache(maxsize=None)
def free_vars(p: Prop) -> frozenset:
    if isinstance(p, Lit):
        return frozenset()
    if isinstance(p, Var):
        return frozenset((p.name,))
    if isinstance(p, App):
        out = frozenset()
        for a in p.args:
            out |= free_vars(a)
        return out
    if isinstance(p, Not):
        return free_vars(p.body)
    if isinstance(p, (And, Or)):
        out = frozenset()
        for a in p.parts:
            out |= free_vars(a)
        return out
    if isinstance(p, Implies):
        return free_vars(p.lhs) | free_vars(p.rhs)
    if isinstance(p, (Forall, Exists)):
        return free_vars(p.body) - {p.var}
    raise LogicError(f"not a proposition: {p!r}")


def subst(p: Prop, mapping: dict) -> Prop:
    """Capture-avoiding substitution of terms for free variables."""
    if not mapping:
        return p
    if isinstance(p, Lit):
        return p
    if isinstance(p, Var):
        return mapping.get(p.name, p)
    if isinstance(p, App):
        return App(p.op, tuple(subst(a, mapping) for a in p.args))
    if isinstance(p, Not):
        return Not(subst(p.body, mapping))
    if isinstance(p, And):
        return And(tuple(subst(a, mapping) for a in p.parts))
    if isinstance(p, Or):
        return Or(tuple(subst(a, mapping) for a in p.parts))
    if isinstance(p, Implies):
        return Implies(subst(p.lhs, mapping), subst(p.rhs, mapping))
    if isinstance(p, (Forall, Exists)):
        inner = {k: v for k, v in mapping.items() if k != p.var}
        if not inner:
            return p
        clash = set()
        for t in inner.values():
            clash |= free_vars(t)
        var = p.var
        body = p.body
        if var in clash:
            fresh = var
            taken = clash | free_vars(body)
            i = 0
            while fresh in taken:
                fresh = f"{var}_{i}"
                i += 1
            body = subst(body, {var: Var(fresh)})
            var = fresh
        cls = type(p)
        return cls(var, p.base, subst(body, inner))
    raise LogicError(f"not a proposition: {p!r}")


def rename(p: Prop, old: str, new: str) -> Prop:
    if old == new:
        return p
    return subst(p, {old: Var(new)})


_NORM_CACHE: dict = {}


def alpha_normalize(p: Prop) -> Prop:
    """Rename quantifier binders to nesting-depth canonical names.

    Claims minted from a fresh-name supply are frequently identical up
    to those names; normalizing first lets validity and denotation
    caches see through the renaming.  The dot prefix cannot collide
    with source identifiers.
    """
    hit = _NORM_CACHE.get(p)
    if hit is None:
        hit = _norm(p, {}, 0)
        _NORM_CACHE[p] = hit
    return hit


def _norm(p, ren, depth):
    if isinstance(p, Lit):
        return p
    if isinstance(p, Var):
        return Var(ren[p.name]) if p.name in ren else p
    if isinstance(p, App):
        return App(p.op, tuple(_norm(a, ren, depth) for a in p.args))
    if isinstance(p, Not):
        return Not(_norm(p.body, ren, depth))
    if isinstance(p, And):
        return And(tuple(_norm(a, ren, depth) for a in p.parts))
    if isinstance(p, Or):
        return Or(tuple(_norm(a, ren, depth) for a in p.parts))
    if isinstance(p, Implies):
        return Implies(_norm(p.lhs, ren, depth), _norm(p.rhs, ren, depth))
    if isinstance(p, (Forall, Exists)):
        new = f".q{depth}"
        return type(p)(
            new, p.base, _norm(p.body, {**ren, p.var: new}, depth + 1)
        )
    raise LogicError(f"not a proposition: {p!r}")


# ---------------------------------------------------------------------------
# Operator and method-predicate evaluation.


def _as_int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise LogicError(f"expected int, got {v!r}")
    return v


def _trunc_mod(a, b):
    # truncated division remainder (sign of the dividend), matching the
    # surface language; mod-by-zero is totalized to 0
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return a - q * b


def _hd(l):
    return l[0] if l else 0


def _tl(l):
    return l[1:] if l else ()


def _sorted(l):
    return all(l[i] <= l[i + 1] for i in range(len(l) - 1))


def _unique(l):
    return len(set(l)) == len(l)


def _all_evens(l):
    return all(x % 2 == 0 for x in l)


def _all_eq(l, x):
    return all(v == x for v in l)


def _complete(t):
    if isinstance(t, Leaf):
        return True
    return (
        _complete(t.left)
        and _complete(t.right)
        and tree_depth(t.left) == tree_depth(t.right)
    )


def _root(t):
    return 0 if isinstance(t, Leaf) else t.val


def _left(t):
    return LEAF if isinstance(t, Leaf) else t.left


def _right(t):
    return LEAF if isinstance(t, Leaf) else t.right


def _lower_bounded(t, b):
    return all(v > b for v in tree_values(t))


def _upper_bounded(t, b):
    return all(v < b for v in tree_values(t))


def _bst_bounds(t, lo, hi):
    if isinstance(t, Leaf):
        return True
    if lo is not None and t.val <= lo:
        return False
    if hi is not None and t.val >= hi:
        return False
    return _bst_bounds(t.left, lo, t.val) and _bst_bounds(t.right, t.val, hi)


def _tree_mem(t, x):
    return any(v == x for v in tree_values(t))


# Method predicates evaluate on concrete values; hd/tl/root/left/right are
# totalized with defaults, so formulas guard them (not emp(l) && hd(l) == h).
METHOD_PREDICATES = {
    "emp": lambda l: len(l) == 0,
    "hd": _hd,
    "tl": _tl,
    "mem": lambda l, x: x in l,
    "len": lambda l: len(l),
    "sorted": _sorted,
    "unique": _unique,
    "all_evens": _all_evens,
    "all_eq": _all_eq,
    "depth": tree_depth,
    "complete": _complete,
    "left": _left,
    "right": _right,
    "root": _root,
    "lower_bounded": _lower_bounded,
    "upper_bounded": _upper_bounded,
    "bst": lambda t: _bst_bounds(t, None, None),
    "tree_mem": _tree_mem,
}

_ARITH = {
    "+": lambda a, b: _as_int(a) + _as_int(b),
    "-": lambda a, b: _as_int(a) - _as_int(b),
    "*": lambda a, b: _as_int(a) * _as_int(b),
    "mod": lambda a, b: _trunc_mod(_as_int(a), _as_int(b)),
    "++": lambda a, b: a + b,
}

_COMPARE = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: _as_int(a) < _as_int(b),
    "<=": lambda a, b: _as_int(a) <= _as_int(b),
    ">": lambda a, b: _as_int(a) > _as_int(b),
    ">=": lambda a, b: _as_int(a) >= _as_int(b),
}

_CONSTRUCTOR_FNS = {
    "Cons": lambda h, t: (h,) + t,
    "Node": Node,
}


# predicates that recurse over their argument; worth caching because the
# same structured values come up once per universe scan
_COSTLY_PREDICATES = frozenset(
    ["mem", "len", "sorted", "unique", "all_evens", "all_eq", "depth",
     "complete", "lower_bounded", "upper_bounded", "bst", "tree_mem"]
)
_PRED_CACHE: dict = {}


def apply_fn(op: str, args: list):
    """Evaluate a deterministic operator / predicate application."""
    if op in _ARITH:
        return _ARITH[op](*args)
    if op in _COMPARE:
        return _COMPARE[op](*args)
    if op in METHOD_PREDICATES:
        if op in _COSTLY_PREDICATES:
            key = (op, *args)
            hit = _PRED_CACHE.get(key)
            if hit is None:
                hit = METHOD_PREDICATES[op](*args)
                _PRED_CACHE[key] = hit
            return hit
        return METHOD_PREDICATES[op](*args)
    if op in _CONSTRUCTOR_FNS:
        return _CONSTRUCTOR_FNS[op](*args)
    raise UnknownPredicate(op)


def eval_term(t: Prop, env: dict, u: Universe):
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Var):
        if t.name not in env:
            raise UnboundVariable(t.name)
        return env[t.name]
    if isinstance(t, App):
        return apply_fn(t.op, [eval_term(a, env, u) for a in t.args])
    raise LogicError(f"not a term: {t!r}")


def _closed(t: Prop, env: dict) -> bool:
    return all(v in env for v in free_vars(t))


_DEAD = object()  # equation can never hold, no witness exists


_EQS_CACHE: dict = {}
_SOLVE_CACHE: dict = {}


def _required_eqs(p: Prop):
    """Equations every satisfying assignment of p must honor.

    Conjunction parts are all required, and an existential body is the
    continuation of its binder, so equations inside constrain the forced
    witness of that binder and may be solved outward.  Returns the
    equations, the spine binder names, and the variables the equations
    read.  A duplicate binder name on one spine is not descended.
    """
    hit = _EQS_CACHE.get(p)
    if hit is None:
        eqs = []
        binders = set()
        fv = set()
        stack = [p]
        while stack:
            q = stack.pop()
            if isinstance(q, And):
                stack.extend(q.parts)
            elif isinstance(q, Exists):
                if q.var not in binders:
                    binders.add(q.var)
                    stack.append(q.body)
            elif isinstance(q, App) and q.op == "==" and len(q.args) == 2:
                eqs.append(q)
                fv |= free_vars(q)
        hit = (tuple(eqs), frozenset(binders), frozenset(fv))
        _EQS_CACHE[p] = hit
    return hit


def _project(con: str, k: int, v):
    if con == "Cons":
        if not isinstance(v, tuple) or not v:
            return _DEAD
        return v[0] if k == 0 else v[1:]
    if con == "Node":
        if not isinstance(v, Node):
            return _DEAD
        return (v.val, v.left, v.right)[k]
    return _DEAD


def _solve_eqs(eqs: tuple, relevant: frozenset, env: dict, u: Universe):
    """Propagate forced values through an equation system.

    A variable equated with an evaluable term takes its value; an
    evaluable term equated against a constructor application pins the
    constructor's variable arguments by projection.  Returns (known,
    dead); dead means some projection hit an impossible shape, so the
    system has no solution at all.
    """
    items = tuple(
        sorted(((k, v) for k, v in env.items() if k in relevant),
               key=lambda kv: kv[0])
    )
    key = (eqs, items)
    hit = _SOLVE_CACHE.get(key)
    if hit is not None:
        return hit
    known = dict(items)
    dead = False
    progress = True
    while progress and not dead:
        progress = False
        for q in eqs:
            a, b = q.args
            for lhs, rhs in ((a, b), (b, a)):
                if (
                    isinstance(lhs, Var)
                    and lhs.name not in known
                    and _closed(rhs, known)
                ):
                    known[lhs.name] = eval_term(rhs, known, u)
                    progress = True
                elif (
                    isinstance(rhs, App)
                    and rhs.op in ("Cons", "Node")
                    and _closed(lhs, known)
                ):
                    need = [
                        (k, arg.name)
                        for k, arg in enumerate(rhs.args)
                        if isinstance(arg, Var) and arg.name not in known
                    ]
                    if need:
                        whole = eval_term(lhs, known, u)
                        for k, name in need:
                            w = _project(rhs.op, k, whole)
                            if w is _DEAD:
                                dead = True
                            known[name] = w
                        progress = True
                if dead:
                    break
            if dead:
                break
    hit = (known, dead)
    _SOLVE_CACHE[key] = hit
    return hit


def _pin_witness(var: str, body: Prop, env: dict, u: Universe):
    """Forced witness for var, solved from body's required equations.

    Returns (found, witness); a witness of _DEAD means the equations
    cannot hold, so no value satisfies the body.
    """
    eqs, binders, relevant = _required_eqs(body)
    if not eqs:
        return False, None
    if not binders.isdisjoint(env):
        # an ambient name shadows a spine binder; scopes would conflate
        return False, None
    known, dead = _solve_eqs(eqs, relevant, env, u)
    if dead:
        return True, _DEAD
    if var in known and var not in env:
        return True, known[var]
    return False, None


def eval_prop(p: Prop, env: dict, u: Universe) -> bool:
    """Truth of p under env, quantifiers ranging over the universe."""
    if isinstance(p, Lit):
        if isinstance(p.value, bool):
            return p.value
        raise LogicError(f"literal {p.value!r} is not a proposition")
    if isinstance(p, (Var, App)):
        v = eval_term(p, env, u)
        if not isinstance(v, bool):
            raise LogicError(f"term {p!r} is not boolean")
        return v
    if isinstance(p, Not):
        return not eval_prop(p.body, env, u)
    if isinstance(p, And):
        return all(eval_prop(q, env, u) for q in p.parts)
    if isinstance(p, Or):
        return any(eval_prop(q, env, u) for q in p.parts)
    if isinstance(p, Implies):
        return (not eval_prop(p.lhs, env, u)) or eval_prop(p.rhs, env, u)
    if isinstance(p, Exists):
        pinned, w = _pin_witness(p.var, p.body, env, u)
        if pinned:
            if w is _DEAD or not in_universe(w, p.base, u):
                return False
            return eval_prop(p.body, {**env, p.var: w}, u)
        return any(
            eval_prop(p.body, {**env, p.var: v}, u) for v in universe_values(p.base, u)
        )
    if isinstance(p, Forall):
        if isinstance(p.body, Implies):
            pinned, w = _pin_witness(p.var, p.body.lhs, env, u)
            if pinned:
                if w is _DEAD or not in_universe(w, p.base, u):
                    return True
                return eval_prop(p.body, {**env, p.var: w}, u)
        return all(
            eval_prop(p.body, {**env, p.var: v}, u) for v in universe_values(p.base, u)
        )
    raise LogicError(f"not a proposition: {p!r}")


# ---------------------------------------------------------------------------
# Pretty printing.


_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "cons": 5, "add": 6, "mul": 7}


def show_prop(p: Prop) -> str:
    return _show(p, 0)


def _show(p, prec) -> str:
    if isinstance(p, Lit):
        if isinstance(p.value, bool):
            return "true" if p.value else "false"
        return show_value(p.value)
    if isinstance(p, Var):
        return p.name
    if isinstance(p, App):
        if p.op in ("==", "!=", "<", "<=", ">", ">="):
            s = f"{_show(p.args[0], _PREC['cmp'] + 1)} {p.op} {_show(p.args[1], _PREC['cmp'] + 1)}"
            return f"({s})" if prec > _PREC["cmp"] else s
        if p.op in ("+", "-"):
            s = f"{_show(p.args[0], _PREC['add'])} {p.op} {_show(p.args[1], _PREC['add'] + 1)}"
            return f"({s})" if prec > _PREC["add"] else s
        if p.op in ("*", "mod"):
            s = f"{_show(p.args[0], _PREC['mul'])} {p.op} {_show(p.args[1], _PREC['mul'] + 1)}"
            return f"({s})" if prec > _PREC["mul"] else s
        if p.op == "++":
            s = f"{_show(p.args[0], _PREC['add'])} ++ {_show(p.args[1], _PREC['add'] + 1)}"
            return f"({s})" if prec > _PREC["add"] else s
        if p.op == "Cons":
            s = f"{_show(p.args[0], _PREC['cons'] + 1)} :: {_show(p.args[1], _PREC['cons'])}"
            return f"({s})" if prec > _PREC["cons"] else s
        return f"{p.op}({', '.join(_show(a, 0) for a in p.args)})"
    if isinstance(p, Not):
        return f"not {_show(p.body, _PREC['not'])}"
    if isinstance(p, And):
        s = " && ".join(_show(q, _PREC["and"] + 1) for q in p.parts)
        return f"({s})" if prec > _PREC["and"] else s
    if isinstance(p, Or):
        s = " || ".join(_show(q, _PREC["or"] + 1) for q in p.parts)
        return f"({s})" if prec > _PREC["or"] else s
    if isinstance(p, Implies):
        s = f"{_show(p.lhs, 2)} ==> {_show(p.rhs, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(p, Forall):
        s = f"forall {p.var} : {p.base}. {_show(p.body, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(p, Exists):
        s = f"exists {p.var} : {p.base}. {_show(p.body, 0)}"
        return f"({s})" if prec > 0 else s
    raise LogicError(f"not a proposition: {p!r}")


# ---------------------------------------------------------------------------
# Best-effort SMT-LIB emission (debugging aid; the pipeline never calls it).


class NoAxioms(LogicError):
    pass


_SMT_AXIOMATIZED = {"len", "emp", "hd", "tl", "mem", "sorted", "all_evens", "unique"}

_SMT_PRELUDE = """\
(set-logic ALL)
(declare-datatypes ((IntList 0))
  (((nil) (cons (hd_c Int) (tl_c IntList)))))
(declare-fun len (IntList) Int)
(assert (= (len nil) 0))
(assert (forall ((h Int) (t IntList)) (= (len (cons h t)) (+ 1 (len t)))))
(declare-fun mem (IntList Int) Bool)
(assert (forall ((x Int)) (not (mem nil x))))
(assert (forall ((h Int) (t IntList) (x Int))
  (= (mem (cons h t) x) (or (= x h) (mem t x)))))
(declare-fun sortedl (IntList) Bool)
(assert (sortedl nil))
(assert (forall ((h Int)) (sortedl (cons h nil))))
(assert (forall ((h1 Int) (h2 Int) (t IntList))
  (= (sortedl (cons h1 (cons h2 t))) (and (<= h1 h2) (sortedl (cons h2 t))))))
(declare-fun all_evens (IntList) Bool)
(assert (all_evens nil))
(assert (forall ((h Int) (t IntList))
  (= (all_evens (cons h t)) (and (= (mod h 2) 0) (all_evens t)))))
(declare-fun uniquel (IntList) Bool)
(assert (uniquel nil))
(assert (forall ((h Int) (t IntList))
  (= (uniquel (cons h t)) (and (not (mem t h)) (uniquel t)))))
"""

_SMT_SORT = {"int": "Int", "nat": "Int", "bool": "Bool", "list": "IntList"}


def _smt_sort(b: BaseType) -> str:
    if b.kind in _SMT_SORT and (b.kind != "list" or b.elem.kind in ("int", "nat")):
        return _SMT_SORT[b.kind]
    raise NoAxioms(f"no SMT sort for {b}")


def _smt_term(t) -> str:
    if isinstance(t, Lit):
        v = t.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v) if v >= 0 else f"(- {-v})"
        if isinstance(v, tuple):
            out = "nil"
            for x in reversed(v):
                out = f"(cons {_smt_term(Lit(x))} {out})"
            return out
        raise NoAxioms(f"no SMT literal for {v!r}")
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        op = t.op
        if op in METHOD_PREDICATES and op not in _SMT_AXIOMATIZED:
            raise NoAxioms(op)
        name = {
            "==": "=",
            "!=": "distinct",
            "mod": "mod",
            "emp": "((_ is nil))",
            "hd": "hd_c",
            "tl": "tl_c",
            "sorted": "sortedl",
            "unique": "uniquel",
        }.get(op, op)
        if op == "emp":
            return f"((_ is nil) {_smt_term(t.args[0])})"
        args = " ".join(_smt_term(a) for a in t.args)
        return f"({name} {args})"
    if isinstance(t, Not):
        return f"(not {_smt_term(t.body)})"
    if isinstance(t, And):
        return "(and " + " ".join(_smt_term(q) for q in t.parts) + ")"
    if isinstance(t, Or):
        return "(or " + " ".join(_smt_term(q) for q in t.parts) + ")"
    if isinstance(t, Implies):
        return f"(=> {_smt_term(t.lhs)} {_smt_term(t.rhs)})"
    if isinstance(t, Forall):
        return f"(forall (({t.var} {_smt_sort(t.base)})) {_smt_term(t.body)})"
    if isinstance(t, Exists):
        return f"(exists (({t.var} {_smt_sort(t.base)})) {_smt_term(t.body)})"
    raise LogicError(f"not a proposition: {t!r}")


def emit_smtlib(p: Prop, comment: str = "") -> str:
    """SMT-LIB script whose unsat answer certifies validity of closed p."""
    if free_vars(p):
        raise LogicError(f"emit_smtlib needs a closed formula, free: {sorted(free_vars(p))}")
    header = f"; {comment}\n" if comment else ""
    return (
        header
        + _SMT_PRELUDE
        + f"(assert (not {_smt_term(p)}))\n(check-sat)\n"
    )
