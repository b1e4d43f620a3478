"""Coverage claim inference for generator bodies in normal form.

Inference walks a body and computes the strongest coverage claim the
operator signatures support.  Let bindings package the claim of their
right-hand side existentially around the body's claim, match branches
contribute one disjunct apiece under the facts their pattern establishes,
and recursive calls assume the declared result type at the argument.
Strict mode additionally rejects any call whose argument coverage is not
wholly inside the callee's parameter refinement, which is what makes an
inferred claim trustworthy as an underapproximation.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lang as T
from . import logic as L
from .typesys import (
    Checker,
    CoverageType,
    FunctionType,
    RefinementType,
    TypeError_,
    TypingContext,
    bot_type,
    disjoin,
    disjoin_all,
    singleton,
)
from .values import (
    BOOL,
    INT,
    LEAF,
    NAT,
    BaseType,
    base_of_value,
    bases_compatible,
    list_of,
    tree_of,
)

INT_LIST = list_of(INT)
INT_TREE = tree_of(INT)


class InferError(TypeError_):
    """The term is outside the typable fragment."""


class CallUnsafe(InferError):
    """An argument's coverage may escape the callee's precondition."""


# -- operator signatures ------------------------------------------------


@dataclass(frozen=True)
class OpSig:
    """Positional params with refinements, coverage-typed result.

    The result qualifier refers to parameters through the bound name of
    each parameter refinement.  ``kind`` feeds the synthesis cost model.
    """

    params: tuple[RefinementType, ...]
    result: CoverageType
    kind: str  # "seedGenerator" | "operator" | "constructor"


def _p(name: str, base: BaseType, qual: L.Prop = L.TRUE) -> RefinementType:
    return RefinementType(name, base, qual)


def _r(base: BaseType, qual: L.Prop) -> CoverageType:
    return CoverageType("v", base, qual)


def _arith(op: str) -> OpSig:
    res = _r(INT, L.eq(L.Var("v"), L.App(op, (L.Var("a"), L.Var("b")))))
    return OpSig((_p("a", INT), _p("b", INT)), res, "operator")


def _compare(op: str) -> OpSig:
    res = _r(BOOL, L.eq(L.Var("v"), L.App(op, (L.Var("a"), L.Var("b")))))
    return OpSig((_p("a", INT), _p("b", INT)), res, "operator")


OPS: dict[str, OpSig] = {
    "int_gen": OpSig((), _r(INT, L.TRUE), "seedGenerator"),
    "nat_gen": OpSig((), _r(NAT, L.TRUE), "seedGenerator"),
    "bool_gen": OpSig((), _r(BOOL, L.TRUE), "seedGenerator"),
    "int_list_gen": OpSig((), _r(INT_LIST, L.TRUE), "seedGenerator"),
    "int_tree_gen": OpSig((), _r(INT_TREE, L.TRUE), "seedGenerator"),
    # both bounds inclusive; an empty range generates nothing
    "int_range": OpSig(
        (_p("lo", INT), _p("hi", INT)),
        _r(INT, L.conj([
            L.App("<=", (L.Var("lo"), L.Var("v"))),
            L.App("<=", (L.Var("v"), L.Var("hi"))),
        ])),
        "operator",
    ),
    "int_notin_gen": OpSig(
        (_p("r", INT_LIST),),
        _r(INT, L.Not(L.App("mem", (L.Var("r"), L.Var("v"))))),
        "operator",
    ),
    "+": _arith("+"),
    "-": _arith("-"),
    "*": _arith("*"),
    "mod": _arith("mod"),
    "++": OpSig(
        (_p("a", INT_LIST), _p("b", INT_LIST)),
        _r(INT_LIST, L.eq(L.Var("v"), L.App("++", (L.Var("a"), L.Var("b"))))),
        "operator",
    ),
    "==": _compare("=="),
    "!=": _compare("!="),
    "<": _compare("<"),
    "<=": _compare("<="),
    ">": _compare(">"),
    ">=": _compare(">="),
    "Cons": OpSig(
        (_p("x", INT), _p("r", INT_LIST)),
        _r(INT_LIST, L.eq(L.Var("v"), L.App("Cons", (L.Var("x"), L.Var("r"))))),
        "constructor",
    ),
    "Node": OpSig(
        (_p("x", INT), _p("l", INT_TREE), _p("r", INT_TREE)),
        _r(INT_TREE, L.eq(L.Var("v"), L.App("Node", (L.Var("x"), L.Var("l"), L.Var("r"))))),
        "constructor",
    ),
}

DEFAULT_GENERATOR: dict[BaseType, str] = {
    INT: "int_gen",
    NAT: "nat_gen",
    BOOL: "bool_gen",
    INT_LIST: "int_list_gen",
    INT_TREE: "int_tree_gen",
}

# ops whose result is a function of their arguments; their let-bound
# name can be inlined when later propositions mention it
DETERMINISTIC_OPS = frozenset(
    ["+", "-", "*", "mod", "++", "Cons", "Node",
     "==", "!=", "<", "<=", ">", ">="]
)


def op_sig(op: str) -> OpSig:
    sig = OPS.get(op)
    if sig is None:
        raise InferError(f"unknown operator {op}")
    return sig


def term_prop(t: T.Term) -> L.Prop:
    """Value term to logic term."""
    if isinstance(t, T.Const):
        return L.Lit(t.value)
    if isinstance(t, T.Var):
        return L.Var(t.name)
    raise InferError(f"expected a value, got {T.pretty(t)}")


def resolve(defs: dict[str, L.Prop], t: T.Term) -> L.Prop:
    """Value term to logic term, seeing through deterministic lets."""
    p = term_prop(t)
    if isinstance(p, L.Var) and p.name in defs:
        return defs[p.name]
    return p


def _instantiate(formals: tuple[str, ...], result: CoverageType,
                 args: tuple[T.Term, ...]) -> CoverageType:
    mapping = {f: term_prop(a) for f, a in zip(formals, args)}
    avoid: set[str] = set()
    for tm in mapping.values():
        avoid |= L.free_vars(tm)
    bound = result.bound
    while bound in avoid:
        bound += "_"
    res = result.rename(bound)
    return CoverageType(bound, res.base, L.subst(res.qual, mapping))


def instantiate_op(op: str, args: tuple[T.Term, ...]) -> CoverageType:
    """Result coverage of an operator at the given value arguments."""
    sig = op_sig(op)
    if len(args) != len(sig.params):
        raise InferError(f"{op} expects {len(sig.params)} arguments, got {len(args)}")
    return _instantiate(tuple(p.bound for p in sig.params), sig.result, args)


# -- match branch facts --------------------------------------------------


def _as_bool_prop(t: L.Prop) -> L.Prop:
    if isinstance(t, L.Lit):
        if t.value is True:
            return L.TRUE
        if t.value is False:
            return L.FALSE
        raise InferError(f"not a boolean scrutinee: {L.show_prop(t)}")
    return t


def pattern_facts(pattern, binders: tuple[str, ...], scrut: L.Prop,
                  scrut_base: BaseType):
    """Shape fact plus binder coverage for a non-wildcard branch.

    Each binder is pinned to the component it destructures, so later
    validity checks can resolve it to a concrete value of the scrutinee.
    """
    if isinstance(pattern, T.PatLit):
        val = pattern.value
        if val is True:
            return _as_bool_prop(scrut), []
        if val is False:
            return L.neg(_as_bool_prop(scrut)), []
        return L.eq(scrut, L.Lit(val)), []
    if isinstance(pattern, T.PatCon):
        con = pattern.con
        if con == "Nil":
            return L.App("emp", (scrut,)), []
        if con == "Cons":
            x, r = binders
            elem = scrut_base.elem or INT
            return (
                L.Not(L.App("emp", (scrut,))),
                [
                    (x, CoverageType(x, elem, L.eq(L.Var(x), L.App("hd", (scrut,))))),
                    (r, CoverageType(r, scrut_base, L.eq(L.Var(r), L.App("tl", (scrut,))))),
                ],
            )
        if con == "Leaf":
            return L.eq(scrut, L.Lit(LEAF)), []
        if con == "Node":
            x, lt, rt = binders
            elem = scrut_base.elem or INT
            return (
                L.neg(L.eq(scrut, L.Lit(LEAF))),
                [
                    (x, CoverageType(x, elem, L.eq(L.Var(x), L.App("root", (scrut,))))),
                    (lt, CoverageType(lt, scrut_base, L.eq(L.Var(lt), L.App("left", (scrut,))))),
                    (rt, CoverageType(rt, scrut_base, L.eq(L.Var(rt), L.App("right", (scrut,))))),
                ],
            )
        raise InferError(f"unknown constructor pattern {con}")
    raise InferError("wildcard must be resolved by the caller")


def value_base(ctx: TypingContext, t: T.Term) -> BaseType:
    if isinstance(t, T.Const):
        return base_of_value(t.value)
    if isinstance(t, T.Var):
        ty = ctx.lookup(t.name)
        if ty is None or isinstance(ty, FunctionType):
            raise InferError(f"unbound variable {t.name}")
        return ty.base
    raise InferError(f"expected a value, got {T.pretty(t)}")


def branch_cases(ctx: TypingContext, defs: dict[str, L.Prop], m: T.Match):
    """Per-branch (branch, shape fact, binder coverage, extended context).

    The shape fact enters the context as an anonymous boolean premise
    before the binders; a wildcard gets the negated shapes of all the
    branches before it.
    """
    sb = value_base(ctx, m.scrutinee)
    st = resolve(defs, m.scrutinee)
    shapes: list[L.Prop] = []
    out = []
    for br in m.branches:
        if isinstance(br.pattern, T.PatWild):
            link = L.conj([L.neg(s) for s in shapes])
            binds: list[tuple[str, CoverageType]] = []
        else:
            link, binds = pattern_facts(br.pattern, br.binders, st, sb)
            shapes.append(link)
        ctx2 = ctx.extend("_", RefinementType("_", BOOL, link))
        for name, ct in binds:
            ctx2 = ctx2.extend(name, ct)
        out.append((br, link, binds, ctx2))
    return out


def _close_branch(link: L.Prop, binds, tb: CoverageType) -> CoverageType:
    names = {n for n, _ in binds}
    if tb.bound in names:
        nb = tb.bound
        while nb in names:
            nb += "_"
        tb = tb.rename(nb)
    q = L.conj([link, tb.qual])
    for name, ct in reversed(binds):
        q = L.exists_q(name, ct.base, L.conj([ct.qual, q]))
    return CoverageType(tb.bound, tb.base, q)


def _exists_wrap(name: str, bct, tb: CoverageType) -> CoverageType:
    if tb.bound == name:
        nb = tb.bound + "_"
        while nb == name:
            nb += "_"
        tb = tb.rename(nb)
    q = L.exists_q(name, bct.base, L.conj([bct.qual, tb.qual]))
    return CoverageType(tb.bound, tb.base, q)


# -- the engine ----------------------------------------------------------


class Inferencer:
    """Claim inference over one definition.

    ``defs_env`` maps names of previously checked generators to their
    function types; calls to them assume the declared result.  A call to
    ``current`` itself assumes the declared result as well, and in strict
    mode must pass a first argument that provably decreased and stayed
    non-negative.
    """

    def __init__(self, checker: Checker, defs_env=None,
                 current: T.GeneratorDef | None = None, strict: bool = False):
        self.chk = checker
        self.defs_env: dict[str, FunctionType] = dict(defs_env or {})
        self.current = current
        self.strict = strict
        self.result_base: BaseType | None = (
            current.ret.base if current is not None else None
        )

    # claims for call forms, shared with repair localization

    def op_claim(self, ctx: TypingContext, op: str, args) -> CoverageType:
        sig = op_sig(op)
        if len(args) != len(sig.params):
            raise InferError(f"{op} expects {len(sig.params)} arguments, got {len(args)}")
        named = tuple((p.bound, p) for p in sig.params)
        self._check_args(ctx, op, named, args, decrease_against=None)
        return instantiate_op(op, args)

    def app_claim(self, ctx: TypingContext, fn: str, args) -> CoverageType:
        ft, decrease = self._fn_sig(fn)
        if len(args) != len(ft.params):
            raise InferError(f"{fn} expects {len(ft.params)} arguments, got {len(args)}")
        self._check_args(ctx, fn, ft.params, args, decrease_against=decrease)
        return _instantiate(tuple(n for n, _ in ft.params), ft.result, args)

    def _fn_sig(self, fn: str):
        if self.current is not None and fn == self.current.name:
            if not self.current.rec:
                raise InferError(f"{fn} does not permit recursive calls")
            params = tuple(self.current.params)
            if not params:
                raise InferError(f"recursive {fn} needs a size parameter")
            return FunctionType(params, self.current.ret), params[0][0]
        ft = self.defs_env.get(fn)
        if ft is None:
            raise InferError(f"unknown generator {fn}")
        return ft, None

    def _check_args(self, ctx, head, named_params, args, decrease_against):
        """Base compatibility always; coverage escape checks in strict mode."""
        taken = set(ctx.names())
        subst_map: dict[str, L.Prop] = {}
        for i, ((fname, rt), a) in enumerate(zip(named_params, args)):
            ab = value_base(ctx, a)
            if not bases_compatible(ab, rt.base):
                raise InferError(
                    f"{head}: argument {i + 1} has base {ab}, wants {rt.base}")
            if self.strict:
                b = f"_a{i}"
                while b in taken:
                    b += "_"
                qual = L.subst(rt.rename(b).qual, subst_map)
                if i == 0 and decrease_against is not None:
                    qual = L.conj([
                        qual,
                        L.App(">=", (L.Var(b), L.Lit(0))),
                        L.App("<", (L.Var(b), L.Var(decrease_against))),
                    ])
                fact = L.eq(L.Var(b), term_prop(a))
                if qual != L.TRUE and \
                        not self.chk.disjoint(ctx, qual, fact, rt.base, bound=b):
                    raise CallUnsafe(
                        f"{head}: argument {i + 1} may fall outside its precondition")
            subst_map[fname] = term_prop(a)

    # definitions

    def infer_def(self, d: T.GeneratorDef) -> CoverageType:
        self.current = d
        self.result_base = d.ret.base
        ctx = params_context(d)
        return self._infer(ctx, {}, d.body, tail=True)

    def check_def(self, d: T.GeneratorDef):
        claim = self.infer_def(d)
        return self.chk.subtype_cov(params_context(d), claim, d.ret), claim

    def infer_term(self, ctx: TypingContext, t: T.Term,
                   result_base: BaseType, defs=None) -> CoverageType:
        self.result_base = result_base
        return self._infer(ctx, dict(defs or {}), t, tail=True)

    # the walk

    def _infer(self, ctx, defs, t, tail: bool) -> CoverageType:
        if isinstance(t, (T.Const, T.Var)):
            return self._value_claim(ctx, t)
        if isinstance(t, T.Err):
            if not tail:
                raise InferError("err makes sense only in result position")
            if self.result_base is None:
                raise InferError("cannot type err without a result base")
            return bot_type(self.result_base)
        if isinstance(t, T.Hole):
            return t.ctype
        if isinstance(t, T.Choice):
            a = self._infer(ctx, defs, t.left, tail)
            b = self._infer(ctx, defs, t.right, tail)
            return disjoin(a, b)
        if isinstance(t, T.Let):
            if isinstance(t.bound, T.Err):
                raise InferError("err cannot be let-bound")
            tb = self._infer(ctx, defs, t.bound, tail=False)
            defs2 = dict(defs)
            if T.is_value(t.bound):
                defs2[t.name] = resolve(defs, t.bound)
            return self._package(ctx, defs2, t.name, tb, t.body, tail)
        if isinstance(t, T.LetOp):
            claim = self.op_claim(ctx, t.op, t.args)
            defs2 = dict(defs)
            if t.op in DETERMINISTIC_OPS:
                defs2[t.name] = L.App(t.op, tuple(resolve(defs, a) for a in t.args))
            return self._package(ctx, defs2, t.name, claim, t.body, tail)
        if isinstance(t, T.LetApp):
            claim = self.app_claim(ctx, t.fn, t.args)
            return self._package(ctx, dict(defs), t.name, claim, t.body, tail)
        if isinstance(t, T.Match):
            parts = []
            for br, link, binds, ctx2 in branch_cases(ctx, defs, t):
                tb = self._infer(ctx2, defs, br.body, tail)
                parts.append(_close_branch(link, binds, tb))
            return disjoin_all(parts)
        raise InferError(f"cannot infer a claim for {t!r}")

    def _package(self, ctx, defs2, name, tx, body, tail):
        ctx2 = ctx.extend(name, tx)
        tb = self._infer(ctx2, defs2, body, tail)
        bct = ctx2.lookup(name)
        return _exists_wrap(name, bct, tb)

    def _value_claim(self, ctx, t) -> CoverageType:
        if isinstance(t, T.Const):
            return singleton(base_of_value(t.value), L.Lit(t.value))
        ty = ctx.lookup(t.name)
        if ty is None or isinstance(ty, FunctionType):
            raise InferError(f"unbound variable {t.name}")
        bound = "v"
        while bound == t.name:
            bound += "_"
        return CoverageType(bound, ty.base, L.eq(L.Var(bound), L.Var(t.name)))


# -- hole claim packaging ------------------------------------------------


def package_claim(ctx: TypingContext, n_prefix: int, ct: CoverageType):
    """Close a claim over the part of ``ctx`` after the first ``n_prefix``
    bindings.

    Named bindings wrap the claim existentially.  Anonymous premises stay
    in the residual context so they keep constraining the target side of
    later subtype checks, except premises about a packaged local, which
    fold into the claim to stay in scope.  Returns the residual context
    and the packaged claim.
    """
    prefix = ctx.bindings[:n_prefix]
    suffix = ctx.bindings[n_prefix:]
    local_names = {
        n for n, ty in suffix
        if n != "_" and not isinstance(ty, FunctionType)
    }
    kept: set[int] = set()
    for idx, (name, ty) in enumerate(suffix):
        if name == "_" and not isinstance(ty, FunctionType):
            if not (L.free_vars(ty.qual) & local_names):
                kept.add(idx)
    residual = TypingContext(
        tuple(prefix) + tuple(suffix[i] for i in sorted(kept)))

    avoid = local_names | {n for n, _ in ctx.bindings}
    bound = ct.bound
    while bound in avoid:
        bound += "_"
    ct = ct.rename(bound)
    q = ct.qual
    for idx in reversed(range(len(suffix))):
        if idx in kept:
            continue
        name, ty = suffix[idx]
        if isinstance(ty, FunctionType):
            continue
        if name == "_":
            q = L.conj([ty.qual, q])
        else:
            q = L.exists_q(name, ty.base, L.conj([ty.qual, q]))
    return residual, CoverageType(bound, ct.base, q)


# -- conveniences --------------------------------------------------------


def params_context(d: T.GeneratorDef) -> TypingContext:
    ctx = TypingContext()
    for name, rt in d.params:
        ctx = ctx.extend(name, rt)
    return ctx


def type_infer(checker: Checker, d: T.GeneratorDef, defs_env=None) -> CoverageType:
    return Inferencer(checker, defs_env).infer_def(d)


def type_infer_strict(checker: Checker, d: T.GeneratorDef, defs_env=None) -> CoverageType:
    return Inferencer(checker, defs_env, strict=True).infer_def(d)


def type_check(checker: Checker, d: T.GeneratorDef,
               goal: CoverageType | None = None, defs_env=None) -> bool:
    """Does the definition's inferred claim cover ``goal``?

    With a goal given, recursive calls assume the goal rather than the
    declared result, which is the inductive reading used by repair.
    """
    target = d
    if goal is not None:
        target = T.GeneratorDef(d.name, d.params, goal, d.body, d.rec)
    ok, _ = Inferencer(checker, defs_env).check_def(target)
    return ok
