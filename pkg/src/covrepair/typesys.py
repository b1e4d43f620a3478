"""Coverage types, refinement types, typing contexts, and subtyping.

A refinement type {x:b | p} bounds a value from above: inhabitants may
only satisfy p.  A coverage type [x:b | p] bounds a generator from below:
it must be able to produce every universe value satisfying p.  Coverage
subtyping therefore runs the usual implication backwards: [p1] is a
subtype of [p2] when p2 implies p1, i.e. the subtype covers at least
everything the supertype promises.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import logic as L
from .values import BaseType, Universe, universe_values


class TypeError_(Exception):
    """Type-level failure (name shadows builtin deliberately avoided)."""


@dataclass(frozen=True)
class RefinementType:
    bound: str
    base: BaseType
    qual: object  # Prop over bound + context vars

    def rename(self, new: str) -> "RefinementType":
        if new == self.bound:
            return self
        return RefinementType(new, self.base, L.rename(self.qual, self.bound, new))

    def __str__(self):
        return f"{{{self.bound}:{self.base} | {L.show_prop(self.qual)}}}"


@dataclass(frozen=True)
class CoverageType:
    bound: str
    base: BaseType
    qual: object

    def rename(self, new: str) -> "CoverageType":
        if new == self.bound:
            return self
        return CoverageType(new, self.base, L.rename(self.qual, self.bound, new))

    def __str__(self):
        return f"[{self.bound}:{self.base} | {L.show_prop(self.qual)}]"


@dataclass(frozen=True)
class FunctionType:
    """First-order generator signature: named refined params, coverage result."""

    params: tuple  # of (name, RefinementType)
    result: CoverageType

    def __str__(self):
        ps = " -> ".join(f"{n}:{t}" for n, t in self.params)
        return f"{ps} -> {self.result}"


def bot_type(base: BaseType, bound: str = "v") -> CoverageType:
    return CoverageType(bound, base, L.FALSE)


def top_coverage(base: BaseType, bound: str = "v") -> CoverageType:
    return CoverageType(bound, base, L.TRUE)


def singleton(base: BaseType, term, bound: str = "v") -> CoverageType:
    return CoverageType(bound, base, L.eq(L.Var(bound), term))


@dataclass(frozen=True)
class TypingContext:
    """Ordered bindings; order matters because ctx_valid quantifies in order."""

    bindings: tuple = ()

    def extend(self, name: str, ty) -> "TypingContext":
        if isinstance(ty, (RefinementType, CoverageType)):
            ty = ty.rename(name) if name != "_" else ty
        return TypingContext(self.bindings + ((name, ty),))

    def lookup(self, name: str):
        for n, t in reversed(self.bindings):
            if n == name:
                return t
        return None

    def names(self):
        return [n for n, _ in self.bindings]

    def base_vars(self):
        return [
            (n, t)
            for n, t in self.bindings
            if isinstance(t, (RefinementType, CoverageType)) and n != "_"
        ]

    def __str__(self):
        return ", ".join(f"{n}:{t}" for n, t in self.bindings)


EMPTY_CONTEXT = TypingContext()


def _anon_names(ctx: TypingContext):
    """Stable fresh names for anonymous bindings so quantifiers stay distinct."""
    out = []
    i = 0
    for n, t in ctx.bindings:
        if n == "_":
            out.append((f"_anon{i}", t))
            i += 1
        else:
            out.append((n, t))
    return out


def close_under_context(ctx: TypingContext, p, universal: bool = False):
    """Fold the context around p, rightmost binding innermost.

    Refinement bindings always become universal premises.  Coverage
    bindings become existential witnesses by default; with universal=True
    they too become premises ("under every instantiation"), which is what
    the disjointness check for call safety wants.
    """
    out = p
    for name, ty in reversed(_anon_names(ctx)):
        if isinstance(ty, FunctionType):
            continue
        qual = L.rename(ty.qual, ty.bound, name)
        if isinstance(ty, RefinementType) or universal:
            out = L.Forall(name, ty.base, L.Implies(qual, out))
        else:
            out = L.Exists(name, ty.base, L.conj([qual, out]))
    return out


# beyond this many context instantiations the set-based evaluator stops
# paying for itself; fall back to the folded formula
_ENV_LIMIT = 20000
_MISS = object()


class Checker:
    """Holds the universe plus memo tables and query counters.

    Every alpha-normalized validity query is counted once; repeats hit the
    memo and are not recounted, mirroring how a solver-backed pipeline
    would cache queries.
    """

    def __init__(self, universe: Universe):
        self.universe = universe
        self._memo: dict = {}
        self.n_queries = 0
        self.recorded = None  # optional list collecting (comment, closed prop)
        self._den_cache: dict = {}
        self._env_cache: dict = {}
        self._fv_cache: dict = {}
        self._sat_cache: dict = {}

    # -- raw validity ------------------------------------------------------

    def ctx_valid(self, ctx: TypingContext, p, universal: bool = False) -> bool:
        closed = L.alpha_normalize(close_under_context(ctx, p, universal=universal))
        key = closed
        if key in self._memo:
            return self._memo[key]
        self.n_queries += 1
        if self.recorded is not None:
            self.recorded.append(closed)
        result = self._fast_valid(ctx, p, universal)
        if result is None:
            result = L.eval_prop(closed, {}, self.universe)
        self._memo[key] = result
        return result

    # -- set-based evaluation ----------------------------------------------
    # The folded formula re-evaluates each qualifier per universe value per
    # query.  When the context is a pure premise prefix we can instead
    # enumerate its instantiations once and compare cached denotations.

    def _fv(self, p) -> frozenset:
        out = self._fv_cache.get(p)
        if out is None:
            out = L.free_vars(p)
            self._fv_cache[p] = out
        return out

    def _universal_envs(self, ctx: TypingContext, universal: bool,
                        relevant: frozenset | None = None):
        """All concrete instantiations of ctx, or None when the context has
        an observable existential (coverage) binding or blows past
        _ENV_LIMIT.

        Bindings the corresponding proposition never reads (``relevant``)
        do not multiply the environments.  Such a binding only gates on
        whether its domain is empty: a premise-read binding is vacuous
        then, an existentially-read one falsifies the closure, which we
        leave to the folded evaluator by bailing out.
        """
        named = []
        i = 0
        for n, ty in ctx.bindings:
            anon = n == "_"
            name = f"_anon{i}" if anon else n
            if anon:
                i += 1
            if isinstance(ty, FunctionType):
                continue
            named.append((name, L.rename(ty.qual, ty.bound, name), ty, anon))
        if relevant is not None:
            relevant = frozenset(relevant) & frozenset(n for n, _, _, _ in named)
        key = (ctx, universal, relevant)
        hit = self._env_cache.get(key, _MISS)
        if hit is not _MISS:
            return hit

        # a binding is enumerated when the prop or some later qualifier
        # reads it; qualifiers of gate-only bindings still read theirs
        enum = [True] * len(named)
        if relevant is not None:
            need = set(relevant)
            for j in range(len(named) - 1, -1, -1):
                name, qual, ty, anon = named[j]
                enum[j] = not anon and name in need
                need |= set(self._fv(qual)) - {name}

        envs: list | None = [{}]
        for (name, qual, ty, anon), keep in zip(named, enum):
            existential = isinstance(ty, CoverageType) and not universal
            if keep:
                if existential:
                    envs = None
                    break
                dom = universe_values(ty.base, self.universe)
                nxt = []
                for env in envs:
                    for val in dom:
                        env2 = {**env, name: val}
                        if L.eval_prop(qual, env2, self.universe):
                            nxt.append(env2)
                envs = nxt
            else:
                nxt = []
                for env in envs:
                    if self._den(qual, ty.base, name, env):
                        nxt.append(env)
                    elif existential:
                        # empty witness domain falsifies this closure
                        nxt = None
                        break
                envs = nxt
                if envs is None:
                    break
            if len(envs) > _ENV_LIMIT:
                envs = None
                break
        self._env_cache[key] = envs
        return envs

    def _den(self, qual, base: BaseType, bound: str, env: dict) -> frozenset:
        """Universe values of base satisfying qual under env.

        Boolean structure is taken apart as set algebra so that shared
        subformulas (one branch claim inside many joins, say) hit the
        cache; only the leaves pay for a universe scan, keyed on the env
        entries they actually read.
        """
        qual = L.alpha_normalize(qual)
        if isinstance(qual, L.Or):
            out = frozenset()
            for q in qual.parts:
                out |= self._den(q, base, bound, env)
            return out
        if isinstance(qual, L.And):
            out = None
            for q in qual.parts:
                d = self._den(q, base, bound, env)
                out = d if out is None else out & d
                if not out:
                    return out
            return self._domain(base) if out is None else out
        if isinstance(qual, L.Not):
            return self._domain(base) - self._den(qual.body, base, bound, env)
        if isinstance(qual, L.Implies):
            return (self._domain(base) - self._den(qual.lhs, base, bound, env)) \
                | self._den(qual.rhs, base, bound, env)
        if isinstance(qual, L.Exists):
            # an equality-defined witness reduces to its defining set:
            # den(exists x. A && v == x) = den(A[x := v]), clipped to
            # x's carrier when that is narrower
            parts = qual.body.parts if isinstance(qual.body, L.And) \
                else (qual.body,)
            vb, vx = L.Var(bound), L.Var(qual.var)
            for i, c in enumerate(parts):
                if isinstance(c, L.App) and c.op == "==" \
                        and len(c.args) == 2 and set(c.args) == {vb, vx}:
                    body = L.subst(L.conj(parts[:i] + parts[i + 1:]),
                                   {qual.var: vb})
                    out = self._den(body, base, bound, env)
                    if qual.base != base:
                        out &= self._domain(qual.base)
                    return out
            dom = universe_values(qual.base, self.universe)
            if len(dom) <= 64:
                # small-carrier witness: expand to a union so any inner
                # equality-defined quantifier gets its turn to reduce
                out = frozenset()
                full = self._domain(base)
                for w in dom:
                    out |= self._den(
                        L.subst(qual.body, {qual.var: L.Lit(w)}),
                        base, bound, env,
                    )
                    if out == full:
                        break
                return out
        fv = self._fv(qual)
        if bound not in fv:
            # qualifier ignores the scanned variable: decide it once
            sub = {k: v for k, v in env.items() if k in fv}
            ok = L.eval_prop(qual, sub, self.universe)
            return self._domain(base) if ok else frozenset()
        items = tuple(
            sorted(((k, v) for k, v in env.items() if k in fv and k != bound),
                   key=lambda kv: kv[0])
        )
        key = (qual, base, bound, items)
        hit = self._den_cache.get(key)
        if hit is None:
            hit = self._den_scan(qual, base, bound, items)
            self._den_cache[key] = hit
        return hit

    def _den_scan(self, qual, base: BaseType, bound: str, items) -> frozenset:
        sub = dict(items)
        if isinstance(qual, L.App) and qual.op == "==" and len(qual.args) == 2:
            a, b = qual.args
            for lhs, rhs in ((a, b), (b, a)):
                if (
                    isinstance(lhs, L.Var)
                    and lhs.name == bound
                    and bound not in self._fv(rhs)
                ):
                    w = L.eval_term(rhs, sub, self.universe)
                    dom = self._domain(base)
                    return frozenset((w,)) & dom
        out = []
        for v in universe_values(base, self.universe):
            sub[bound] = v
            if L.eval_prop(qual, sub, self.universe):
                out.append(v)
        return frozenset(out)

    def _domain(self, base: BaseType) -> frozenset:
        hit = self._den_cache.get(base)
        if hit is None:
            hit = frozenset(universe_values(base, self.universe))
            self._den_cache[base] = hit
        return hit

    def _sat(self, qual, base: BaseType, bound: str, env: dict, value) -> bool:
        """One membership test against qual, memoized per qualifier and the
        env entries it reads.  Cheaper than a full denotation when only a
        few values ever get asked."""
        qual = L.alpha_normalize(qual)
        fv = self._fv(qual)
        if bound not in fv:
            return value in self._den(qual, base, bound, env)
        items = tuple(
            sorted(((k, v) for k, v in env.items() if k in fv and k != bound),
                   key=lambda kv: kv[0])
        )
        key = (qual, base, bound, items)
        m = self._sat_cache.get(key)
        if m is None:
            m = {}
            self._sat_cache[key] = m
        r = m.get(value)
        if r is None:
            sub = dict(items)
            sub[bound] = value
            r = L.eval_prop(qual, sub, self.universe)
            m[value] = r
        return r

    def _fast_valid(self, ctx: TypingContext, p, universal: bool):
        envs = self._universal_envs(ctx, universal, self._fv(p))
        if envs is None:
            return None
        if isinstance(p, L.Forall) and isinstance(p.body, L.Implies):
            prem, conc = p.body.lhs, p.body.rhs
            if conc == L.FALSE:
                return not any(
                    self._den(prem, p.base, p.var, env) for env in envs
                )
            for env in envs:
                d = self._den(prem, p.base, p.var, env)
                if d and not d <= self._den(conc, p.base, p.var, env):
                    return False
            return True
        for env in envs:
            if not L.eval_prop(p, env, self.universe):
                return False
        return True

    # -- fingerprints --------------------------------------------------------
    # A coverage fingerprint evaluates a type's qualifier on a fixed spread
    # of (environment, value) probes.  Distinct fingerprints certify two
    # types are inequivalent without any validity query; equal fingerprints
    # still need the real check.

    def _probe_points(self, ctx: TypingContext, base: BaseType):
        key = ("probes", ctx, base)
        hit = self._env_cache.get(key, _MISS)
        if hit is not _MISS:
            return hit
        envs = self._universal_envs(ctx, False)
        if envs is None:
            self._env_cache[key] = None
            return None
        picked_envs = envs if len(envs) <= 6 else \
            [envs[(i * (len(envs) - 1)) // 5] for i in range(6)]
        dom = universe_values(base, self.universe)
        if len(dom) <= 48:
            vals = dom
        else:
            head = list(dom[:32])
            step = max(1, (len(dom) - 32) // 16)
            vals = head + list(dom[32::step][:16])
        pts = tuple((env, val) for env in picked_envs for val in vals)
        self._env_cache[key] = pts
        return pts

    def coverage_fingerprint(self, ctx: TypingContext, t: CoverageType):
        pts = self._probe_points(ctx, t.base)
        if pts is None:
            return None
        return tuple(
            self._sat(t.qual, t.base, t.bound, env, val) for env, val in pts
        )

    # -- derived judgments -------------------------------------------------

    def disjoint(self, ctx: TypingContext, phi1, phi2, base: BaseType, bound: str = "v") -> bool:
        """True when no universe value satisfies phi2 while violating phi1,
        under every context instantiation."""
        body = L.Forall(bound, base, L.Implies(phi2, phi1))
        return self.ctx_valid(ctx, body, universal=True)

    def subtype_cov(self, ctx: TypingContext, t1: CoverageType, t2: CoverageType) -> bool:
        """t1 <: t2 : everything t2 promises, t1 also covers."""
        if not _bases_match(t1.base, t2.base):
            return False
        a = t1.rename("v")
        b = t2.rename("v")
        body = L.Forall("v", a.base, L.Implies(b.qual, a.qual))
        return self.ctx_valid(ctx, body)

    def coverage_equiv(self, ctx: TypingContext, t1: CoverageType, t2: CoverageType) -> bool:
        return self.subtype_cov(ctx, t1, t2) and self.subtype_cov(ctx, t2, t1)

    def is_bot(self, ctx: TypingContext, t: CoverageType) -> bool:
        pts = self._probe_points(ctx, t.base)
        if pts is not None:
            for env, val in pts:
                if self._sat(t.qual, t.base, t.bound, env, val):
                    return False  # witnessed, no query needed
        return self.coverage_equiv(ctx, t, bot_type(t.base))

    def nonempty_coverage(self, ctx: TypingContext, t: CoverageType) -> bool:
        body = L.Exists(t.bound, t.base, t.qual)
        return self.ctx_valid(ctx, body)


def _bases_match(a: BaseType, b: BaseType) -> bool:
    from .values import bases_compatible

    return bases_compatible(a, b)


def disjoin(t1: CoverageType, t2: CoverageType) -> CoverageType:
    """Join of coverage claims: the union of the two covered sets."""
    if not _bases_match(t1.base, t2.base):
        raise TypeError_(f"cannot disjoin {t1.base} with {t2.base}")
    b = t2.rename(t1.bound)
    base = t1.base if t1.base == b.base or t1.base.kind != "nat" else b.base
    return CoverageType(t1.bound, base, L.disj([t1.qual, b.qual]))


def disjoin_all(ts) -> CoverageType:
    ts = list(ts)
    if not ts:
        raise TypeError_("disjoin_all of nothing")
    out = ts[0]
    for t in ts[1:]:
        out = disjoin(out, t)
    return out


# ---------------------------------------------------------------------------
# Well-formedness: free variables bound, quantifier prefix EPR-shaped, and
# no context coverage binding that covers nothing (error-only bindings).


class IllFormed(TypeError_):
    pass


def _effective_quantifiers(p, polarity: bool, out: list):
    if isinstance(p, (L.Lit, L.Var, L.App)):
        return
    if isinstance(p, L.Not):
        _effective_quantifiers(p.body, not polarity, out)
        return
    if isinstance(p, (L.And, L.Or)):
        for q in p.parts:
            _effective_quantifiers(q, polarity, out)
        return
    if isinstance(p, L.Implies):
        _effective_quantifiers(p.lhs, not polarity, out)
        _effective_quantifiers(p.rhs, polarity, out)
        return
    if isinstance(p, L.Forall):
        out.append("A" if polarity else "E")
        _effective_quantifiers(p.body, polarity, out)
        return
    if isinstance(p, L.Exists):
        out.append("E" if polarity else "A")
        _effective_quantifiers(p.body, polarity, out)
        return


def is_epr(p) -> bool:
    """Exists*-forall* discipline on the effective (polarity-aware) prefix."""
    quants: list = []
    _effective_quantifiers(p, True, quants)
    seen_forall = False
    for q in quants:
        if q == "A":
            seen_forall = True
        elif seen_forall:
            return False
    return True


def well_formed(chk: Checker, ctx: TypingContext, t) -> bool:
    """Scope + EPR + no empty coverage binding in the context."""
    in_scope = {n for n, ty in _anon_names(ctx) if not isinstance(ty, FunctionType)}
    if isinstance(t, FunctionType):
        scope = set(in_scope)
        for name, pt in t.params:
            fv = L.free_vars(pt.qual) - {pt.bound}
            if not fv <= scope:
                return False
            if not is_epr(pt.qual):
                return False
            scope.add(name)
        fv = L.free_vars(t.result.qual) - {t.result.bound}
        if not fv <= scope:
            return False
        return is_epr(t.result.qual)
    fv = L.free_vars(t.qual) - {t.bound}
    if not fv <= in_scope:
        return False
    if not is_epr(t.qual):
        return False
    # reject contexts carrying a coverage binding with empty coverage
    prefix = EMPTY_CONTEXT
    for name, ty in ctx.bindings:
        if isinstance(ty, CoverageType):
            if not chk.nonempty_coverage(prefix, ty):
                return False
        prefix = prefix.extend(name, ty)
    return True
