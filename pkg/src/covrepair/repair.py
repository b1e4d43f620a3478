"""The end-to-end pipeline: find the coverage gap, patch the generator.

A run infers the coverage the generator already has, abduces a formula
for what the goal still misses, plants holes at the result positions
able to supply it, and synthesizes patches for the holes.  When every
extraction was precise the result provably covers the goal; otherwise
the outcome is flagged and the patches still cover each hole's share.

The completeness-focused strategy is the comparison baseline: same gap
analysis, but every hole is filled with the default generator of its
base type, trading precision for blanket coverage.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import lang as T
from . import logic as L
from .abduce import generalize
from .infer import DEFAULT_GENERATOR, type_check, type_infer, params_context
from .localize import localize
from .synthesize import DEFAULT_K_MAX, DEFAULT_MAX_COST, synthesize
from .typesys import Checker, CoverageType, FunctionType
from .values import Universe

COVERAGE_GUIDED = "coverageGuided"
COMPLETE_FILL = "completenessFocused"


class RepairError(Exception):
    pass


@dataclass(frozen=True)
class RepairTask:
    """Everything one repair run needs, independent of file format."""

    name: str
    generator: T.GeneratorDef
    goal: CoverageType
    atoms: tuple  # of L.Prop over the goal's bound and the params
    components: tuple  # of head-symbol names for synthesis
    helpers: tuple = ()  # earlier GeneratorDefs callable from the target
    universe: Universe = Universe()
    max_cost: int = DEFAULT_MAX_COST
    k_max: int = DEFAULT_K_MAX
    fuel: int = 100  # sampling recursion budget, not used by repair itself

    def defs_env(self) -> dict[str, FunctionType]:
        return {h.name: FunctionType(h.params, h.ret) for h in self.helpers}

    def all_defs(self) -> dict[str, T.GeneratorDef]:
        out = {h.name: h for h in self.helpers}
        out[self.generator.name] = self.generator
        return out


@dataclass(frozen=True)
class RepairReport:
    """One record per repair run, the unit the benchmark table rows use."""

    changed: bool
    goal_met: bool
    precise: bool  # every extraction precise (vacuously true when unchanged)
    need: L.Prop  # abduced missing coverage, FALSE when already complete
    holes: tuple = ()
    patches: dict = None  # hole id -> patch text ("" for no arms)
    precise_holes: dict = None
    n_terms: int = 0
    n_queries: int = 0
    alpha: int = 0
    abduce_s: float = 0.0
    synth_s: float = 0.0
    total_s: float = 0.0


@dataclass(frozen=True)
class RepairOutcome:
    repaired: T.GeneratorDef
    report: RepairReport
    strategy: str


def dedup_choice(t):
    """Collapse surface-choice arms that became duplicates after patching."""
    if isinstance(t, (T.Const, T.Var, T.Err, T.Hole)):
        return t
    if isinstance(t, T.Let):
        return T.Let(t.name, dedup_choice(t.bound), dedup_choice(t.body))
    if isinstance(t, T.LetOp):
        return T.LetOp(t.name, t.op, t.args, dedup_choice(t.body))
    if isinstance(t, T.LetApp):
        return T.LetApp(t.name, t.fn, t.args, dedup_choice(t.body))
    if isinstance(t, T.Match):
        return T.Match(t.scrutinee, tuple(
            T.Branch(b.pattern, b.binders, dedup_choice(b.body))
            for b in t.branches))
    if isinstance(t, T.Choice):
        arms: list = []

        def flat(s):
            if isinstance(s, T.Choice):
                flat(s.left)
                flat(s.right)
            else:
                arms.append(dedup_choice(s))

        flat(t.left)
        flat(t.right)
        kept: list = []
        for a in arms:
            if not any(T.alpha_equiv(a, k) for k in kept):
                kept.append(a)
        out = kept[0]
        for a in kept[1:]:
            out = T.Choice(out, a)
        return out
    raise T.LangError(f"not a term: {t!r}")


def _finalize(d: T.GeneratorDef, sketch: T.GeneratorDef, repairs: dict):
    """Patch the sketch and clean it up; unpatched holes fall back to err."""
    body = T.fill_holes_partial(
        sketch.body, {h: r for h, r in repairs.items() if r is not None})
    body = dedup_choice(T.simplify_choice_err(body))
    return T.GeneratorDef(d.name, d.params, d.ret, body, d.rec)


def _unchanged(task: RepairTask, strategy: str, need: L.Prop,
               abduce_s: float, t0: float) -> RepairOutcome:
    report = RepairReport(
        changed=False, goal_met=True, precise=True, need=need,
        patches={}, precise_holes={},
        abduce_s=abduce_s, total_s=time.time() - t0)
    return RepairOutcome(task.generator, report, strategy)


def _gap(chk: Checker, task: RepairTask):
    """Shared front half: inferred claim and the abduced missing coverage."""
    d = task.generator
    goal = task.goal.rename(d.ret.bound)
    if goal.base != d.ret.base:
        raise RepairError(
            f"goal base {goal.base} differs from result base {d.ret.base}")
    defs_env = task.defs_env()
    claim = type_infer(chk, d, defs_env)
    ctx = params_context(d)
    t0 = time.time()
    need = generalize(chk, ctx, tuple(task.atoms), goal.qual,
                      claim.rename(goal.bound).qual, goal.base, goal.bound)
    abduce_s = time.time() - t0
    return goal, defs_env, need, abduce_s


def complete(task: RepairTask) -> RepairOutcome:
    """Coverage-guided repair: abduce the gap, synthesize minimal patches."""
    t0 = time.time()
    chk = Checker(task.universe)
    d = task.generator
    goal, defs_env, need, abduce_s = _gap(chk, task)
    if need == L.FALSE:
        return _unchanged(task, COVERAGE_GUIDED, need, abduce_s, t0)

    need_t = CoverageType(goal.bound, goal.base, need)
    sketch, obligations = localize(chk, d, need_t, defs_env)
    t1 = time.time()
    out = synthesize(chk, sketch, obligations, task.components, defs_env,
                     max_cost=task.max_cost, k_max=task.k_max)
    synth_s = time.time() - t1

    fixed = _finalize(d, sketch, out.repairs)
    goal_met = type_check(chk, fixed, goal=goal, defs_env=defs_env)
    report = RepairReport(
        changed=True, goal_met=goal_met,
        precise=all(out.precise.values()), need=need,
        holes=tuple(ob.hole_id for ob in obligations),
        patches={h: out.pretty[h] for h in out.repairs},
        precise_holes=dict(out.precise),
        n_terms=out.n_terms, n_queries=out.n_queries, alpha=out.last_alpha,
        abduce_s=abduce_s, synth_s=synth_s, total_s=time.time() - t0)
    return RepairOutcome(fixed, report, COVERAGE_GUIDED)


def repair_completeness_focused(task: RepairTask) -> RepairOutcome:
    """Baseline: same gap analysis, default generator in every hole."""
    t0 = time.time()
    chk = Checker(task.universe)
    d = task.generator
    goal, defs_env, need, abduce_s = _gap(chk, task)
    if need == L.FALSE:
        return _unchanged(task, COMPLETE_FILL, need, abduce_s, t0)

    need_t = CoverageType(goal.bound, goal.base, need)
    sketch, obligations = localize(chk, d, need_t, defs_env)
    supply = T.NameSupply(T.max_fresh_index(sketch.body))
    repairs = {}
    patches = {}
    for ob in obligations:
        gen = DEFAULT_GENERATOR[ob.target.base]
        name = supply.fresh()
        repairs[ob.hole_id] = T.LetOp(name, gen, (), T.Var(name))
        patches[ob.hole_id] = f"{gen}()"
    fixed = _finalize(d, sketch, repairs)
    goal_met = type_check(chk, fixed, goal=goal, defs_env=defs_env)
    report = RepairReport(
        changed=True, goal_met=goal_met, precise=False, need=need,
        holes=tuple(ob.hole_id for ob in obligations),
        patches=patches,
        precise_holes={h: False for h in repairs},
        abduce_s=abduce_s, total_s=time.time() - t0)
    return RepairOutcome(fixed, report, COMPLETE_FILL)


def repair(task: RepairTask, strategy: str = COVERAGE_GUIDED) -> RepairOutcome:
    if strategy == COVERAGE_GUIDED:
        return complete(task)
    if strategy == COMPLETE_FILL:
        return repair_completeness_focused(task)
    raise RepairError(f"unknown strategy {strategy!r}")


def _calls_self(t, name: str) -> bool:
    if isinstance(t, (T.Const, T.Var, T.Err, T.Hole)):
        return False
    if isinstance(t, T.Let):
        return _calls_self(t.bound, name) or _calls_self(t.body, name)
    if isinstance(t, T.LetOp):
        return _calls_self(t.body, name)
    if isinstance(t, T.LetApp):
        return t.fn == name or _calls_self(t.body, name)
    if isinstance(t, T.Match):
        return any(_calls_self(b.body, name) for b in t.branches)
    if isinstance(t, T.Choice):
        return _calls_self(t.left, name) or _calls_self(t.right, name)
    raise T.LangError(f"not a term: {t!r}")


def bias_weights(d: T.GeneratorDef, size_param: str | None = None) -> T.GeneratorDef:
    """Skew every two-way choice with exactly one recursive arm.

    The recursive arm is taken unless a fresh draw is zero modulo the
    current size bound plus one, so recursion dominates while the bound
    is large and tapers off as it shrinks.  Possible outputs do not
    change: both tests stay reachable whenever the bound is positive.
    """
    if size_param is None:
        size_param = d.params[0][0]
    if not d.params or d.params[0][0] != size_param:
        raise RepairError(f"{size_param} is not the leading parameter")
    supply = T.NameSupply(T.max_fresh_index(d.body))

    def walk(t):
        if isinstance(t, (T.Const, T.Var, T.Err, T.Hole)):
            return t
        if isinstance(t, T.Let):
            return T.Let(t.name, walk(t.bound), walk(t.body))
        if isinstance(t, T.LetOp):
            return T.LetOp(t.name, t.op, t.args, walk(t.body))
        if isinstance(t, T.LetApp):
            return T.LetApp(t.name, t.fn, t.args, walk(t.body))
        if isinstance(t, T.Match):
            return T.Match(t.scrutinee, tuple(
                T.Branch(b.pattern, b.binders, walk(b.body))
                for b in t.branches))
        if isinstance(t, T.Choice):
            left = walk(t.left)
            right = walk(t.right)
            lrec = _calls_self(left, d.name)
            rrec = _calls_self(right, d.name)
            if lrec == rrec:
                return T.Choice(left, right)
            plain, rec = (right, left) if lrec else (left, right)
            bound = supply.fresh()
            draw = supply.fresh()
            toss = supply.fresh()
            return T.LetOp(
                bound, "+", (T.Var(size_param), T.Const(1)),
                T.LetOp(draw, "nat_gen", (),
                        T.LetOp(toss, "mod", (T.Var(draw), T.Var(bound)),
                                T.Match(T.Var(toss), (
                                    T.Branch(T.PatLit(0), (), plain),
                                    T.Branch(T.PatWild(), (), rec))))))
        raise T.LangError(f"not a term: {t!r}")

    return T.GeneratorDef(d.name, d.params, d.ret, walk(d.body), d.rec)
