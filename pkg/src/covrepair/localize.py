"""Turning a generator with a coverage gap into a sketch with typed holes.

Every result position of the body can contribute missing values, so each
one gets a hole targeted at the abduced missing coverage: value leaves
keep their old behavior beside a fresh hole, err leaves are replaced
outright, and holes the author already wrote stay, joined with a fresh
hole for the new target.  The context recorded with each hole carries the
path facts and bindings in force at that position.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lang as T
from . import logic as L
from .infer import DETERMINISTIC_OPS, Inferencer, InferError, branch_cases, resolve
from .typesys import Checker, CoverageType, TypingContext


class LocalizeError(InferError):
    """The term cannot be sketched, e.g. a hole in a non-result position."""


@dataclass(frozen=True)
class HoleObligation:
    """What one hole must cover, and under which bindings."""

    hole_id: int
    context: TypingContext
    target: CoverageType
    n_params: int  # context prefix that stays on the premise side


def _condense(ctx: TypingContext, n_params: int, det: set,
              target_qual: L.Prop) -> TypingContext:
    """Drop deterministic scaffolding bindings nothing refers to.

    Facts about such a binding were already stated in terms of its
    definition when the context was built, so removing the binding keeps
    every remaining fact well scoped.  Parameters always stay.
    """
    prefix = ctx.bindings[:n_params]
    suffix = ctx.bindings[n_params:]
    used = set(L.free_vars(target_qual))
    kept = []
    for name, ty in reversed(suffix):
        if name != "_" and name in det and name not in used:
            continue
        kept.append((name, ty))
        used |= L.free_vars(ty.qual)
    return TypingContext(tuple(prefix) + tuple(reversed(kept)))


def localize(chk: Checker, d: T.GeneratorDef, need: CoverageType,
             defs_env=None) -> tuple[T.GeneratorDef, tuple[HoleObligation, ...]]:
    """Sketch ``d`` for the missing coverage ``need``.

    Returns the sketch and its obligations in program order.  Holes keep
    ids already present in ``d``; fresh ids continue above them.
    """
    inf = Inferencer(chk, defs_env, current=d)
    inf.result_base = d.ret.base
    existing = T.hole_ids(d.body)
    counter = [max(existing) + 1 if existing else 0]
    obligations: list[HoleObligation] = []
    n_params = len(d.params)

    need = CoverageType(need.bound, need.base, need.qual)

    def fresh() -> int:
        counter[0] += 1
        return counter[0] - 1

    def note(hid: int, ctx: TypingContext, defs: dict,
             target: CoverageType) -> None:
        ctx = _condense(ctx, n_params, set(defs), target.qual)
        obligations.append(HoleObligation(hid, ctx, target, n_params))

    def walk(ctx: TypingContext, defs: dict, t: T.Term) -> T.Term:
        if isinstance(t, (T.Const, T.Var)):
            hid = fresh()
            note(hid, ctx, defs, need)
            return T.Choice(t, T.Hole(hid, need))
        if isinstance(t, T.Err):
            hid = fresh()
            note(hid, ctx, defs, need)
            return T.Hole(hid, need)
        if isinstance(t, T.Hole):
            note(t.hid, ctx, defs, t.ctype)
            hid = fresh()
            note(hid, ctx, defs, need)
            return T.Choice(t, T.Hole(hid, need))
        if isinstance(t, T.Choice):
            left = walk(ctx, defs, t.left)
            right = walk(ctx, defs, t.right)
            return T.Choice(left, right)
        if isinstance(t, T.Let):
            if T.hole_ids(t.bound):
                raise LocalizeError("a hole may only sit in result position")
            claim = inf._infer(ctx, defs, t.bound, tail=False)
            defs2 = dict(defs)
            if T.is_value(t.bound):
                defs2[t.name] = resolve(defs, t.bound)
            ctx2 = ctx.extend(t.name, claim)
            return T.Let(t.name, t.bound, walk(ctx2, defs2, t.body))
        if isinstance(t, T.LetOp):
            claim = inf.op_claim(ctx, t.op, t.args)
            defs2 = dict(defs)
            if t.op in DETERMINISTIC_OPS:
                defs2[t.name] = L.App(t.op, tuple(resolve(defs, a) for a in t.args))
            ctx2 = ctx.extend(t.name, claim)
            return T.LetOp(t.name, t.op, t.args, walk(ctx2, defs2, t.body))
        if isinstance(t, T.LetApp):
            claim = inf.app_claim(ctx, t.fn, t.args)
            ctx2 = ctx.extend(t.name, claim)
            return T.LetApp(t.name, t.fn, t.args, walk(ctx2, dict(defs), t.body))
        if isinstance(t, T.Match):
            branches = []
            for br, _link, _binds, ctx2 in branch_cases(ctx, defs, t):
                branches.append(T.Branch(br.pattern, br.binders,
                                         walk(ctx2, defs, br.body)))
            return T.Match(t.scrutinee, tuple(branches))
        raise LocalizeError(f"cannot sketch {t!r}")

    ctx0 = TypingContext()
    for name, rt in d.params:
        ctx0 = ctx0.extend(name, rt)
    body = walk(ctx0, {}, d.body)
    sketch = T.GeneratorDef(d.name, d.params, d.ret, body, d.rec)
    return sketch, tuple(obligations)
