"""Abduction of the missing-coverage qualifier.

Given the goal qualifier, the qualifier a generator already covers, and a
finite atom vocabulary, find the weakest formula over those atoms that,
together with the current coverage, suffices for the goal.  The search
space is the minterm lattice over the atoms: every candidate is a union
of minterms conjoined with the goal, so weakening means keeping fewer
minterms.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import logic as L
from .typesys import Checker, TypingContext
from .values import BaseType


class NoSolution(Exception):
    """No formula over the given atoms closes the coverage gap."""


def minterm(atoms: tuple[L.Prop, ...], mask: int) -> L.Prop:
    """Conjunction giving each atom the sign of its bit in ``mask``."""
    parts = []
    for i, a in enumerate(atoms):
        parts.append(a if mask & (1 << i) else L.neg(a))
    return L.conj(parts)


def learn(atoms: tuple[L.Prop, ...], pos: tuple[int, ...],
          neg: tuple[int, ...], psi: L.Prop) -> L.Prop:
    """Strongest formula consistent with the labeled minterms.

    Positive minterms must be inside, negative ones outside; under the
    goal ``psi`` that pins the formula to the union of the positives.
    """
    if not pos:
        return L.FALSE
    return L.conj([L.disj([minterm(atoms, m) for m in pos]), psi])


@dataclass(frozen=True)
class Partition:
    covered: tuple[int, ...]  # minterms already inside the current coverage
    unknown: tuple[int, ...]  # minterms that may still be missing


def partition_init(chk: Checker, ctx: TypingContext, atoms: tuple[L.Prop, ...],
                   psi: L.Prop, psi_cur: L.Prop, base: BaseType,
                   bound: str = "v") -> Partition:
    """Split all minterms by whether the current coverage absorbs them."""
    covered, unknown = [], []
    for mask in range(1 << len(atoms)):
        m = L.conj([minterm(atoms, mask), psi])
        if chk.disjoint(ctx, psi_cur, m, base, bound=bound):
            covered.append(mask)
        else:
            unknown.append(mask)
    return Partition(tuple(covered), tuple(unknown))


def generalize(chk: Checker, ctx: TypingContext, atoms: tuple[L.Prop, ...],
               psi: L.Prop, psi_cur: L.Prop, base: BaseType,
               bound: str = "v") -> L.Prop:
    """Weakest sufficient missing-coverage formula over the atoms.

    Returns bottom when the current coverage alone suffices.  Otherwise
    greedily discards unknown minterms, trying the cheap ones first: a
    minterm is kept only when sufficiency fails without it.  Raises
    NoSolution when even all unknown minterms together do not suffice.
    """

    def sufficient(masks) -> bool:
        have = L.disj([psi_cur] + [minterm(atoms, m) for m in masks])
        body = L.Forall(bound, base, L.Implies(psi, have))
        return chk.ctx_valid(ctx, body, universal=True)

    if sufficient(()):
        return L.FALSE

    part = partition_init(chk, ctx, atoms, psi, psi_cur, base, bound)
    queue = sorted(part.unknown, key=lambda m: (bin(m).count("1"), m))
    if not sufficient(queue):
        raise NoSolution(
            f"{len(atoms)} atoms cannot express the missing coverage")

    kept: list[int] = []
    for i, m in enumerate(queue):
        rest = queue[i + 1:]
        if not sufficient(kept + rest):
            kept.append(m)
    return learn(atoms, tuple(kept), (), psi)
