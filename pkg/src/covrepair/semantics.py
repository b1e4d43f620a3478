"""Executable semantics: exhaustive possibilistic enumeration and sampling.

``enumerate_outputs`` computes the set of values a generator can produce
when every nondeterministic site is finitized to the universe.  It is the
ground-truth denotation the type-level claims are judged against, so it
must not consult any coverage machinery.  ``sample`` draws one run with a
seeded RNG and is what the benchmark harness measures.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lang as T
from . import logic as L
from .values import (
    BOOL,
    INT,
    NAT,
    OutcomeSet,
    Universe,
    base_of_value,
    in_universe,
    list_of,
    tree_of,
    universe_values,
)
from .values import LEAF, Node

INT_LIST = list_of(INT)
INT_TREE = tree_of(INT)

DEFAULT_FUEL = 100_000


class EvalError(Exception):
    """The program is stuck: unbound name, unmatched scrutinee, bad op."""


class RunErr(Exception):
    """A sampled run hit err."""


class HoleEncountered(Exception):
    """A sampled run reached an unfilled hole."""


class FuelExhausted(Exception):
    """A sampled run exceeded the step budget."""


_DETERMINISTIC = frozenset(
    ["+", "-", "*", "mod", "++", "Cons", "Node",
     "==", "!=", "<", "<=", ">", ">="]
)


def _op_outputs(op: str, args: tuple, u: Universe):
    """All values an operator can step to, finitized to the universe
    where the operator itself is unbounded."""
    if op in _DETERMINISTIC:
        return (L.apply_fn(op, list(args)),)
    if op == "int_gen":
        return universe_values(INT, u)
    if op == "nat_gen":
        return universe_values(NAT, u)
    if op == "bool_gen":
        return universe_values(BOOL, u)
    if op == "int_list_gen":
        return universe_values(INT_LIST, u)
    if op == "int_tree_gen":
        return universe_values(INT_TREE, u)
    if op == "int_range":
        lo, hi = args
        return tuple(range(lo, hi + 1))
    if op == "int_notin_gen":
        (r,) = args
        return tuple(x for x in universe_values(INT, u) if x not in r)
    raise EvalError(f"unknown operator {op}")


def _match_branch(m: T.Match, sv):
    """First branch the scrutinee value selects, with binder values."""
    for br in m.branches:
        p = br.pattern
        if isinstance(p, T.PatWild):
            return br, {}
        if isinstance(p, T.PatLit):
            # bool and int literals are distinct even though bool <: int
            if isinstance(sv, bool) == isinstance(p.value, bool) and sv == p.value:
                return br, {}
            continue
        con = p.con
        if con == "Nil" and sv == ():
            return br, {}
        if con == "Cons" and isinstance(sv, tuple) and len(sv) > 0:
            x, r = br.binders
            return br, {x: sv[0], r: sv[1:]}
        if con == "Leaf" and sv == LEAF:
            return br, {}
        if con == "Node" and isinstance(sv, Node):
            x, lt, rt = br.binders
            return br, {x: sv.val, lt: sv.left, rt: sv.right}
    raise EvalError(f"no branch matches {sv!r}")


@dataclass
class _Res:
    values: set
    may_err: bool = False
    truncated: bool = False
    clean: bool = True

    def merge(self, other: "_Res") -> "_Res":
        return _Res(
            self.values | other.values,
            self.may_err or other.may_err,
            self.truncated or other.truncated,
            self.clean and other.clean,
        )


class Enumerator:
    """Exhaustive evaluator over one definition environment.

    Call results are memoized per (name, args).  A recursive knot, where
    a call re-enters itself with identical arguments, contributes nothing
    on the inner visit; results computed under such a visit are not
    memoized, which keeps the memo sound for structurally decreasing
    generators.
    """

    def __init__(self, defs: dict[str, T.GeneratorDef], u: Universe,
                 fuel: int = DEFAULT_FUEL):
        self.defs = defs
        self.u = u
        self.fuel = fuel
        self.memo: dict = {}
        self.active: set = set()

    def _spend(self) -> bool:
        if self.fuel <= 0:
            return False
        self.fuel -= 1
        return True

    def _value(self, env: dict, t: T.Term):
        if isinstance(t, T.Const):
            return t.value
        if isinstance(t, T.Var):
            if t.name not in env:
                raise EvalError(f"unbound variable {t.name}")
            return env[t.name]
        raise EvalError(f"expected a value, got {T.pretty(t)}")

    def call(self, fn: str, argvals: tuple) -> _Res:
        key = (fn, argvals)
        hit = self.memo.get(key)
        if hit is not None:
            return _Res(set(hit.values), hit.may_err, hit.truncated, True)
        if key in self.active:
            return _Res(set(), clean=False)
        d = self.defs.get(fn)
        if d is None:
            raise EvalError(f"unknown generator {fn}")
        if len(argvals) != len(d.params):
            raise EvalError(f"{fn} expects {len(d.params)} arguments")
        self.active.add(key)
        try:
            env = {name: v for (name, _), v in zip(d.params, argvals)}
            r = self.eval(env, d.body)
        finally:
            self.active.discard(key)
        if r.clean:
            self.memo[key] = _Res(frozenset(r.values), r.may_err, r.truncated)
        return r

    def eval(self, env: dict, t: T.Term) -> _Res:
        if isinstance(t, (T.Const, T.Var)):
            return _Res({self._value(env, t)})
        if isinstance(t, T.Err):
            return _Res(set(), may_err=True)
        if isinstance(t, T.Hole):
            ct = t.ctype
            out = set()
            for v in universe_values(ct.base, self.u):
                env2 = dict(env)
                env2[ct.bound] = v
                if L.eval_prop(ct.qual, env2, self.u):
                    out.add(v)
            return _Res(out)
        if isinstance(t, T.Choice):
            return self.eval(env, t.left).merge(self.eval(env, t.right))
        if isinstance(t, T.Let):
            rhs = self.eval(env, t.bound)
            return self._bind(env, t.name, rhs, t.body)
        if isinstance(t, T.LetOp):
            args = tuple(self._value(env, a) for a in t.args)
            rhs = _Res(set(_op_outputs(t.op, args, self.u)))
            return self._bind(env, t.name, rhs, t.body)
        if isinstance(t, T.LetApp):
            if not self._spend():
                return _Res(set(), truncated=True)
            args = tuple(self._value(env, a) for a in t.args)
            rhs = self.call(t.fn, args)
            return self._bind(env, t.name, rhs, t.body)
        if isinstance(t, T.Match):
            if not self._spend():
                return _Res(set(), truncated=True)
            sv = self._value(env, t.scrutinee)
            br, binds = _match_branch(t, sv)
            env2 = dict(env)
            env2.update(binds)
            return self.eval(env2, br.body)
        raise EvalError(f"cannot evaluate {t!r}")

    def _bind(self, env: dict, name: str, rhs: _Res, body: T.Term) -> _Res:
        out = _Res(set(), rhs.may_err, rhs.truncated, rhs.clean)
        for v in rhs.values:
            env2 = dict(env)
            env2[name] = v
            out = out.merge(self.eval(env2, body))
        return out


def _restrict(r: _Res, u: Universe) -> OutcomeSet:
    kept = set()
    truncated = r.truncated
    for v in r.values:
        if in_universe(v, base_of_value(v), u):
            kept.add(v)
        else:
            truncated = True
    return OutcomeSet(frozenset(kept), r.may_err, truncated)


def enumerate_outputs(defs: dict[str, T.GeneratorDef], name: str,
                      argvals: tuple, u: Universe,
                      fuel: int = DEFAULT_FUEL) -> OutcomeSet:
    """Every universe value the named generator can produce at ``argvals``.

    Output values that fall outside the universe are dropped and flagged
    as truncation, so callers comparing against universe-bounded claims
    see exactly the comparable fragment.
    """
    en = Enumerator(defs, u, fuel)
    r = en.call(name, tuple(argvals))
    return _restrict(r, u)


def term_outputs(defs: dict[str, T.GeneratorDef], env: dict, t: T.Term,
                 u: Universe, fuel: int = DEFAULT_FUEL) -> OutcomeSet:
    """Like enumerate_outputs, for a bare term under an environment."""
    en = Enumerator(defs, u, fuel)
    r = en.eval(dict(env), t)
    return _restrict(r, u)


# -- sampling ------------------------------------------------------------


class Sampler:
    """One random run per call; nondeterministic sites draw uniformly.

    Unlike enumeration, sampled structures may leave the universe: the
    universe only finitizes the value carriers of choice sites, not the
    shapes a run can build from them.
    """

    def __init__(self, defs: dict[str, T.GeneratorDef], u: Universe, rng,
                 fuel: int = DEFAULT_FUEL):
        self.defs = defs
        self.u = u
        self.rng = rng
        self.fuel = fuel

    def _spend(self):
        if self.fuel <= 0:
            raise FuelExhausted("step budget exceeded")
        self.fuel -= 1

    def run(self, fn: str, argvals: tuple):
        d = self.defs.get(fn)
        if d is None:
            raise EvalError(f"unknown generator {fn}")
        env = {name: v for (name, _), v in zip(d.params, argvals)}
        return self._run(env, d.body)

    def _value(self, env, t):
        if isinstance(t, T.Const):
            return t.value
        if isinstance(t, T.Var):
            if t.name not in env:
                raise EvalError(f"unbound variable {t.name}")
            return env[t.name]
        raise EvalError(f"expected a value, got {T.pretty(t)}")

    def _draw(self, op: str, args: tuple):
        outs = _op_outputs(op, args, self.u)
        if not outs:
            raise RunErr(f"{op} has no output at {args!r}")
        if len(outs) == 1:
            return outs[0]
        return self.rng.choice(outs)

    def _run(self, env: dict, t: T.Term):
        while True:
            self._spend()
            if isinstance(t, (T.Const, T.Var)):
                return self._value(env, t)
            if isinstance(t, T.Err):
                raise RunErr("reached err")
            if isinstance(t, T.Hole):
                raise HoleEncountered(f"hole ??{t.hid}")
            if isinstance(t, T.Choice):
                t = t.left if self.rng.random() < 0.5 else t.right
                continue
            if isinstance(t, T.Let):
                v = self._run(env, t.bound)
                env = dict(env)
                env[t.name] = v
                t = t.body
                continue
            if isinstance(t, T.LetOp):
                args = tuple(self._value(env, a) for a in t.args)
                env = dict(env)
                env[t.name] = self._draw(t.op, args)
                t = t.body
                continue
            if isinstance(t, T.LetApp):
                args = tuple(self._value(env, a) for a in t.args)
                d = self.defs.get(t.fn)
                if d is None:
                    raise EvalError(f"unknown generator {t.fn}")
                env2 = {name: v for (name, _), v in zip(d.params, args)}
                v = self._run(env2, d.body)
                env = dict(env)
                env[t.name] = v
                t = t.body
                continue
            if isinstance(t, T.Match):
                sv = self._value(env, t.scrutinee)
                br, binds = _match_branch(t, sv)
                env = dict(env)
                env.update(binds)
                t = br.body
                continue
            raise EvalError(f"cannot evaluate {t!r}")


def sample(defs: dict[str, T.GeneratorDef], name: str, argvals: tuple,
           u: Universe, rng, fuel: int = DEFAULT_FUEL):
    """Draw one output of the named generator; raises RunErr on err."""
    return Sampler(defs, u, rng, fuel).run(name, tuple(argvals))
