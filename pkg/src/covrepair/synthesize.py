"""Bottom-up synthesis of hole patches, cheapest candidates first.

Candidates are built as applications of task components over previously
enumerated terms, so every term of cost alpha appears in the round for
alpha and never again.  Each hole keeps a pool: all well-typed candidates
(any base, they feed later argument positions) and, among those of the
hole's base, the ones lying inside the hole's target coverage.  A patch
is extracted as soon as some join of maximal in-target candidates is
coverage-equivalent to the target; if the budget runs out, the fallback
is the cheapest over-approximating candidate, refined where possible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import lang as T
from . import logic as L
from .infer import (
    DEFAULT_GENERATOR,
    Inferencer,
    InferError,
    OPS,
    package_claim,
    params_context,
)
from .localize import HoleObligation
from .typesys import (
    Checker,
    CoverageType,
    FunctionType,
    TypingContext,
    disjoin_all,
)
from .values import BaseType, base_of_value, bases_compatible

DEFAULT_MAX_COST = 40
DEFAULT_K_MAX = 4

SEED_COST = 1
APP_COST = 2
OFF_BASE_COST = 1  # head produces a base other than the hole's
REPEAT_COST = 2    # immediate subterm repeats the head symbol


class SynthesisError(Exception):
    pass


@dataclass(frozen=True)
class Component:
    """One head symbol candidates may apply."""

    name: str
    kind: str  # seedGenerator | operator | constructor | generator | recursiveSelf
    arg_bases: tuple[BaseType, ...]
    result_base: BaseType
    base_cost: int = APP_COST


@dataclass(frozen=True)
class CConst:
    value: object

    @property
    def base(self) -> BaseType:
        return base_of_value(self.value)


@dataclass(frozen=True)
class CVar:
    name: str
    var_base: BaseType

    @property
    def base(self) -> BaseType:
        return self.var_base


@dataclass(frozen=True)
class CApp:
    comp: Component
    args: tuple

    @property
    def base(self) -> BaseType:
        return self.comp.result_base


def cand_cost(c, target_base: BaseType) -> int:
    """Size-and-diversity cost, cheaper when the head hits the hole's base."""
    if isinstance(c, (CConst, CVar)):
        cost = SEED_COST
        if not bases_compatible(c.base, target_base):
            cost += OFF_BASE_COST
        return cost
    cost = c.comp.base_cost
    if not bases_compatible(c.base, target_base):
        cost += OFF_BASE_COST
    for a in c.args:
        cost += cand_cost(a, target_base)
        if isinstance(a, CApp) and a.comp.name == c.comp.name:
            cost += REPEAT_COST
    return cost


def cand_term(c, supply) -> T.Term:
    """Candidate tree to a normal-form term ending in its value."""
    steps: list[tuple[str, Component, list[T.Term]]] = []

    def go(node) -> T.Term:
        if isinstance(node, CConst):
            return T.Const(node.value)
        if isinstance(node, CVar):
            return T.Var(node.name)
        args = [go(a) for a in node.args]
        name = supply()
        steps.append((name, node.comp, args))
        return T.Var(name)

    tail: T.Term = go(c)
    out = tail
    for name, comp, args in reversed(steps):
        if comp.kind in ("generator", "recursiveSelf"):
            out = T.LetApp(name, comp.name, tuple(args), out)
        else:
            out = T.LetOp(name, comp.name, tuple(args), out)
    return out


def cand_pretty(c) -> str:
    if isinstance(c, CConst):
        from .values import show_value
        return show_value(c.value)
    if isinstance(c, CVar):
        return c.name
    if not c.args:
        return f"{c.comp.name}()"
    return f"{c.comp.name}({', '.join(cand_pretty(a) for a in c.args)})"


def build_components(names, defs_env: dict[str, FunctionType],
                     current: T.GeneratorDef | None,
                     hole_bases) -> tuple[Component, ...]:
    """Component list in task order, closed under default generators.

    The default generator of every hole base is appended when absent so
    the fallback extraction always has a covering term to start from.
    """
    out: list[Component] = []
    seen: set[str] = set()

    def add(name: str) -> None:
        if name in seen:
            return
        seen.add(name)
        if current is not None and name == current.name:
            params = tuple(rt.base for _, rt in current.params)
            out.append(Component(name, "recursiveSelf", params, current.ret.base))
            return
        if name in defs_env:
            ft = defs_env[name]
            params = tuple(rt.base for _, rt in ft.params)
            out.append(Component(name, "generator", params, ft.result.base))
            return
        sig = OPS.get(name)
        if sig is None:
            raise SynthesisError(f"unknown component {name}")
        out.append(Component(name, sig.kind,
                             tuple(p.base for p in sig.params),
                             sig.result.base))

    for name in names:
        add(name)
    for b in hole_bases:
        gen = DEFAULT_GENERATOR.get(b)
        if gen is not None:
            add(gen)
    return tuple(out)


def seed_terms(ctx: TypingContext, u) -> tuple:
    """Constant and variable leaves, in a fixed deterministic order."""
    from .values import INT, LEAF, universe_values

    seeds: list = [CConst(i) for i in universe_values(INT, u)]
    seeds.append(CConst(False))
    seeds.append(CConst(True))
    seeds.append(CConst(()))
    seeds.append(CConst(LEAF))
    for name, ty in ctx.bindings:
        if name == "_" or isinstance(ty, FunctionType):
            continue
        seeds.append(CVar(name, ty.base))
    return tuple(seeds)


@dataclass(frozen=True)
class PoolEntry:
    cand: object
    term: T.Term
    claim: CoverageType  # packaged over the hole's local bindings
    cost: int
    in_target: bool
    fp: tuple | None = None


def fp_below(lo, hi) -> bool:
    """Pointwise fingerprint dominance, a cheap necessary condition.

    A coverage inclusion can only hold when every probe point satisfied
    by the smaller claim is satisfied by the larger one.  Unknown prints
    never rule anything out.
    """
    if lo is None or hi is None:
        return True
    return all(b or not a for a, b in zip(lo, hi))


def fp_join(fps):
    out = None
    for fp in fps:
        if fp is None:
            return None
        out = fp if out is None else tuple(a or b for a, b in zip(out, fp))
    return out


@dataclass
class TermPool:
    """Per-hole synthesis state."""

    obligation: HoleObligation
    residual: TypingContext
    seeds: tuple
    exp: list[PoolEntry] = field(default_factory=list)
    seen: set = field(default_factory=set)
    buckets: dict = field(default_factory=dict)  # fingerprint -> [PoolEntry]
    target_fp: tuple | None = None
    best: T.Term | None = None
    best_pretty: str = ""
    precise: bool = False

    def cand_entries(self):
        return [e for e in self.exp if e.in_target]


class Synthesizer:
    def __init__(self, chk: Checker, sketch: T.GeneratorDef,
                 obligations, component_names, defs_env=None,
                 max_cost: int = DEFAULT_MAX_COST, k_max: int = DEFAULT_K_MAX):
        self.chk = chk
        self.sketch = sketch
        self.obligations = tuple(obligations)
        self.defs_env = dict(defs_env or {})
        self.max_cost = max_cost
        self.k_max = k_max
        self.u = chk.universe
        hole_bases = [ob.target.base for ob in self.obligations]
        self.components = build_components(
            component_names, self.defs_env, sketch, hole_bases)
        self.n_terms = 0
        self.last_alpha = 0
        self._supply_n = 0
        taken = {n for n, _ in params_context(sketch).bindings}
        for ob in self.obligations:
            taken |= {n for n, _ in ob.context.bindings}
        self._taken = taken
        self.pools: dict[int, TermPool] = {}
        for ob in self.obligations:
            residual, _ = package_claim(
                ob.context, ob.n_params, CoverageType("v", ob.target.base, L.TRUE))
            pool = TermPool(ob, residual, seed_terms(ob.context, self.u))
            if chk.is_bot(residual, ob.target):
                # nothing to cover here: the minimal covering subset is
                # empty, so the hole needs no arms at all
                pool.precise = True
            else:
                pool.target_fp = chk.coverage_fingerprint(residual, ob.target)
            self.pools[ob.hole_id] = pool

    def _fresh(self) -> str:
        while True:
            name = f"_s{self._supply_n}"
            self._supply_n += 1
            if name not in self._taken:
                return name

    # -- enumeration -----------------------------------------------------

    def _cost_buckets(self, pool: TermPool, base: BaseType, head: str):
        """Pool members of a base, grouped by cost as seen from ``head``.

        The repeat surcharge lands on the argument here, so a bucket key
        is the exact contribution of that argument to the application.
        """
        tb = pool.obligation.target.base
        out: dict[int, list] = {}
        for s in pool.seeds:
            if bases_compatible(s.base, base):
                out.setdefault(cand_cost(s, tb), []).append(s)
        for e in pool.exp:
            # seeds are already listed above
            c = e.cand
            if isinstance(c, CApp) and bases_compatible(c.base, base):
                eff = e.cost + (REPEAT_COST if c.comp.name == head else 0)
                out.setdefault(eff, []).append(c)
        return out

    def _combos(self, slots, budget: int):
        """Argument tuples whose bucket costs sum to exactly the budget."""
        if not slots:
            if budget == 0:
                yield ()
            return
        head, rest = slots[0], slots[1:]
        floor = len(rest)  # every later slot costs at least 1
        for cost in sorted(head):
            if cost > budget - floor:
                break
            for tail in self._combos(rest, budget - cost):
                for c in head[cost]:
                    yield (c,) + tail

    def gen_exp(self, pool: TermPool, alpha: int):
        """All candidates of cost exactly ``alpha``, deterministically.

        Seeds come first, then one application of each component in task
        order over argument tuples drawn from the pool at round start.
        Slot-wise cost buckets keep each round linear in the number of
        exact-cost combinations rather than the full argument product.
        """
        tb = pool.obligation.target.base
        for s in pool.seeds:
            if s in pool.seen:
                continue
            if cand_cost(s, tb) == alpha:
                yield s
        for comp in self.components:
            head_cost = comp.base_cost
            if not bases_compatible(comp.result_base, tb):
                head_cost += OFF_BASE_COST
            budget = alpha - head_cost
            if budget < len(comp.arg_bases):
                continue
            if not comp.arg_bases:
                if budget == 0:
                    c = CApp(comp, ())
                    if c not in pool.seen:
                        yield c
                continue
            slots = [self._cost_buckets(pool, b, comp.name)
                     for b in comp.arg_bases]
            for combo in self._combos(slots, budget):
                c = CApp(comp, combo)
                if c not in pool.seen:
                    yield c

    # -- filtering -------------------------------------------------------

    def filter_term(self, pool: TermPool, cand) -> PoolEntry | None:
        """Admit a candidate: claim inference, emptiness and novelty checks."""
        ob = pool.obligation
        pool.seen.add(cand)
        self.n_terms += 1
        term = cand_term(cand, self._fresh)
        inf = Inferencer(self.chk, self.defs_env, current=self.sketch, strict=True)
        try:
            raw = inf.infer_term(ob.context, term, cand.base)
        except InferError:
            return None
        _, claim = package_claim(ob.context, ob.n_params, raw)
        if self.chk.is_bot(pool.residual, claim):
            return None
        fp = self.chk.coverage_fingerprint(pool.residual, claim)
        rivals = pool.buckets.setdefault((cand.base.kind, fp), []) \
            if fp is not None else pool.exp
        for e in rivals:
            if bases_compatible(e.cand.base, cand.base) and \
                    self.chk.coverage_equiv(pool.residual, e.claim, claim):
                return None
        in_target = bases_compatible(cand.base, ob.target.base) and \
            fp_below(fp, pool.target_fp) and \
            self.chk.subtype_cov(pool.residual, ob.target, claim)
        entry = PoolEntry(cand, term, claim, cand_cost(cand, ob.target.base),
                          in_target, fp)
        pool.exp.append(entry)
        if fp is not None:
            rivals.append(entry)
        return entry

    # -- extraction ------------------------------------------------------

    def _join_term(self, entries) -> T.Term:
        out = entries[0].term
        for e in entries[1:]:
            out = T.Choice(out, e.term)
        return out

    def _join_pretty(self, entries) -> str:
        return " (+) ".join(cand_pretty(e.cand) for e in entries)

    def extract_precise(self, pool: TermPool) -> bool:
        """Join of direct supertypes of the target, smallest cost first."""
        cands = pool.cand_entries()
        if not cands:
            return False
        direct = []
        for e in cands:
            dominated = False
            for e2 in cands:
                if e2 is e:
                    continue
                if not fp_below(e.fp, e2.fp):
                    continue
                if self.chk.subtype_cov(pool.residual, e2.claim, e.claim) and \
                        not self.chk.subtype_cov(pool.residual, e.claim, e2.claim):
                    dominated = True
                    break
            if not dominated:
                direct.append(e)
        target = pool.obligation.target
        subsets = []
        for k in range(1, min(self.k_max, len(direct)) + 1):
            for combo in itertools.combinations(range(len(direct)), k):
                entries = [direct[i] for i in combo]
                subsets.append((sum(e.cost for e in entries), k,
                                self._join_pretty(entries), combo, entries))
        subsets.sort(key=lambda s: s[:4])
        for _, _, pretty, _, entries in subsets:
            joined_fp = fp_join([e.fp for e in entries])
            if joined_fp is not None and pool.target_fp is not None and \
                    joined_fp != pool.target_fp:
                continue
            join = disjoin_all([e.claim for e in entries])
            if self.chk.coverage_equiv(pool.residual, join, target):
                pool.best = self._join_term(entries)
                pool.best_pretty = pretty
                pool.precise = True
                return True
        return False

    def extract_imprecise(self, pool: TermPool) -> bool:
        """Cheapest covering candidate, narrowed by strictly-smaller joins."""
        ob = pool.obligation
        covering = []
        for i, e in enumerate(pool.exp):
            if bases_compatible(e.cand.base, ob.target.base) and \
                    fp_below(pool.target_fp, e.fp) and \
                    self.chk.subtype_cov(pool.residual, e.claim, ob.target):
                covering.append((e.cost, cand_pretty(e.cand), i, e))
        if not covering:
            return False
        covering.sort(key=lambda c: c[:3])
        _, _, _, r = covering[0]
        below = []
        for i, e in enumerate(pool.exp):
            if not bases_compatible(e.cand.base, ob.target.base):
                continue
            if not fp_below(e.fp, r.fp):
                continue
            if self.chk.subtype_cov(pool.residual, r.claim, e.claim) and \
                    not self.chk.subtype_cov(pool.residual, e.claim, r.claim):
                below.append(e)
        subsets = []
        for k in range(1, min(self.k_max, len(below)) + 1):
            for combo in itertools.combinations(range(len(below)), k):
                entries = [below[i] for i in combo]
                subsets.append((sum(e.cost for e in entries), k,
                                self._join_pretty(entries), combo, entries))
        subsets.sort(key=lambda s: s[:4])
        for _, _, pretty, _, entries in subsets:
            if not fp_below(pool.target_fp, fp_join([e.fp for e in entries])):
                continue
            join = disjoin_all([e.claim for e in entries])
            if self.chk.subtype_cov(pool.residual, join, ob.target):
                pool.best = self._join_term(entries)
                pool.best_pretty = pretty
                return True
        pool.best = r.term
        pool.best_pretty = cand_pretty(r.cand)
        return True

    # -- the loop --------------------------------------------------------

    def current_repairs(self) -> dict[int, T.Term]:
        return {hid: p.best for hid, p in self.pools.items()
                if p.best is not None}

    def _goal_met(self) -> bool:
        body = T.fill_holes_partial(self.sketch.body, self.current_repairs())
        d = T.GeneratorDef(self.sketch.name, self.sketch.params,
                           self.sketch.ret, body, self.sketch.rec)
        try:
            ok, claim = Inferencer(self.chk, self.defs_env).check_def(d)
        except InferError:
            return False
        return ok

    def run(self) -> bool:
        """Rounds of increasing cost until the whole goal is covered."""
        met = self._goal_met()
        if not met:
            for alpha in range(0, self.max_cost + 1):
                self.last_alpha = alpha
                changed = False
                for ob in self.obligations:
                    pool = self.pools[ob.hole_id]
                    if pool.precise:
                        continue
                    for cand in self.gen_exp(pool, alpha):
                        entry = self.filter_term(pool, cand)
                        if entry is not None and entry.in_target:
                            self.extract_precise(pool)
                            if pool.precise:
                                changed = True
                                break
                # the goal can only newly hold when some patch changed
                if changed and self._goal_met():
                    met = True
                    break
        for pool in self.pools.values():
            if not pool.precise and pool.best is None:
                self.extract_imprecise(pool)
        if not met:
            met = self._goal_met()
        return met


@dataclass
class SynthOutcome:
    repairs: dict  # hole id -> patch term or None
    precise: dict  # hole id -> bool
    pretty: dict   # hole id -> human-readable patch
    goal_met: bool
    n_terms: int
    n_queries: int
    last_alpha: int


def synthesize(chk: Checker, sketch: T.GeneratorDef, obligations,
               component_names, defs_env=None,
               max_cost: int = DEFAULT_MAX_COST,
               k_max: int = DEFAULT_K_MAX) -> SynthOutcome:
    q0 = chk.n_queries
    syn = Synthesizer(chk, sketch, obligations, component_names, defs_env,
                      max_cost, k_max)
    met = syn.run()
    repairs = {ob.hole_id: syn.pools[ob.hole_id].best for ob in syn.obligations}
    precise = {ob.hole_id: syn.pools[ob.hole_id].precise for ob in syn.obligations}
    pretty = {ob.hole_id: syn.pools[ob.hole_id].best_pretty for ob in syn.obligations}
    return SynthOutcome(repairs, precise, pretty, met,
                        syn.n_terms, chk.n_queries - q0, syn.last_alpha)
