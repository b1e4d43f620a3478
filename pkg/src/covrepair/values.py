"""Concrete values, base types, and the finite universe they range over.

Every semantic question in this package (evaluation, subtyping, abduction)
is decided by enumerating a finite universe of values.  The universe is a
small, explicit parameter rather than an ambient constant so tasks can
scale it up or down.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


class Unit:
    """The sole inhabitant of the unit base type."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "()"


UNIT = Unit()


@dataclass(frozen=True)
class Leaf:
    def __repr__(self):
        return "Leaf"


LEAF = Leaf()


@dataclass(frozen=True)
class Node:
    """Binary tree node; lists are plain tuples, trees are Leaf/Node."""

    val: object
    left: object
    right: object

    def __repr__(self):
        return f"Node({self.val!r}, {self.left!r}, {self.right!r})"


def is_tree(v) -> bool:
    return isinstance(v, (Leaf, Node))


def tree_depth(t) -> int:
    # depth(Leaf) = 0
    if isinstance(t, Leaf):
        return 0
    return 1 + max(tree_depth(t.left), tree_depth(t.right))


def tree_values(t):
    if isinstance(t, Leaf):
        return
    yield t.val
    yield from tree_values(t.left)
    yield from tree_values(t.right)


@dataclass(frozen=True)
class BaseType:
    """A first-order base type: a scalar or a list/tree over one."""

    kind: str  # "unit" | "bool" | "nat" | "int" | "list" | "tree"
    elem: "BaseType | None" = None

    def __str__(self):
        if self.kind in ("list", "tree"):
            return f"{self.elem} {self.kind}"
        return self.kind


UNIT_T = BaseType("unit")
BOOL = BaseType("bool")
NAT = BaseType("nat")
INT = BaseType("int")


def list_of(elem: BaseType) -> BaseType:
    return BaseType("list", elem)


def tree_of(elem: BaseType) -> BaseType:
    return BaseType("tree", elem)


def is_scalar(b: BaseType) -> bool:
    return b.kind in ("unit", "bool", "nat", "int")


def bases_compatible(a: BaseType, b: BaseType) -> bool:
    """nat values embed into int; everything else must match exactly."""
    if a == b:
        return True
    return {a.kind, b.kind} == {"nat", "int"} or (
        a.kind == b.kind and a.kind in ("list", "tree") and bases_compatible(a.elem, b.elem)
    )


class UniverseError(Exception):
    pass


@dataclass(frozen=True)
class Universe:
    """Finite carrier sets: an inclusive int range plus size bounds."""

    int_lo: int = -1
    int_hi: int = 2
    max_list_len: int = 4
    max_tree_depth: int = 3

    def __post_init__(self):
        if self.int_lo > self.int_hi:
            raise UniverseError(f"empty int range [{self.int_lo}, {self.int_hi}]")
        if self.max_list_len < 0 or self.max_tree_depth < 0:
            raise UniverseError("negative size bound")


DEFAULT_UNIVERSE = Universe()


@lru_cache(maxsize=None)
def universe_values(b: BaseType, u: Universe) -> tuple:
    """All universe inhabitants of b, in a fixed canonical order.

    Scalars ascend numerically; lists are ordered by length then
    lexicographically; trees by depth then by the order their parts were
    enumerated.
    """
    if b.kind == "unit":
        return (UNIT,)
    if b.kind == "bool":
        return (False, True)
    if b.kind == "int":
        return tuple(range(u.int_lo, u.int_hi + 1))
    if b.kind == "nat":
        return tuple(range(max(u.int_lo, 0), u.int_hi + 1))
    if b.kind == "list":
        elems = universe_values(b.elem, u)
        out = []
        import itertools

        for k in range(u.max_list_len + 1):
            out.extend(itertools.product(elems, repeat=k))
        return tuple(out)
    if b.kind == "tree":
        elems = universe_values(b.elem, u)
        by_depth: list[list] = [[LEAF]]
        for d in range(1, u.max_tree_depth + 1):
            upto_prev = [t for layer in by_depth for t in layer]
            prev_layer = set(map(id, by_depth[-1]))
            level = []
            for v in elems:
                for lt in upto_prev:
                    for rt in upto_prev:
                        if max(tree_depth(lt), tree_depth(rt)) == d - 1:
                            level.append(Node(v, lt, rt))
            by_depth.append(level)
        return tuple(t for layer in by_depth for t in layer)
    raise UniverseError(f"no universe for base type {b}")


def universe_set(b: BaseType, u: Universe) -> frozenset:
    return frozenset(universe_values(b, u))


def in_universe(v, b: BaseType, u: Universe) -> bool:
    if b.kind == "int":
        return isinstance(v, int) and not isinstance(v, bool) and u.int_lo <= v <= u.int_hi
    if b.kind == "nat":
        return isinstance(v, int) and not isinstance(v, bool) and max(u.int_lo, 0) <= v <= u.int_hi
    if b.kind == "bool":
        return isinstance(v, bool)
    if b.kind == "unit":
        return isinstance(v, Unit)
    if b.kind == "list":
        return (
            isinstance(v, tuple)
            and len(v) <= u.max_list_len
            and all(in_universe(x, b.elem, u) for x in v)
        )
    if b.kind == "tree":
        if not is_tree(v):
            return False
        return tree_depth(v) <= u.max_tree_depth and all(
            in_universe(x, b.elem, u) for x in tree_values(v)
        )
    return False


def base_of_value(v) -> BaseType:
    """Best-effort base type of a literal value (lists/trees of ints by default)."""
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT
    if isinstance(v, Unit):
        return UNIT_T
    if isinstance(v, tuple):
        return list_of(base_of_value(v[0])) if v else list_of(INT)
    if is_tree(v):
        for x in tree_values(v):
            return tree_of(base_of_value(x))
        return tree_of(INT)
    raise UniverseError(f"not a value: {v!r}")


@dataclass(frozen=True)
class OutcomeSet:
    """Exhaustive possibilistic result of running a generator.

    values   -- every universe value some execution can return
    may_err  -- some execution raises the DSL error
    truncated -- the fuel budget was exhausted; values is a lower bound
    """

    values: frozenset
    may_err: bool = False
    truncated: bool = False


def show_value(v) -> str:
    """Render a value in the DSL's literal syntax."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Unit):
        return "()"
    if isinstance(v, tuple):
        return "[" + "; ".join(show_value(x) for x in v) + "]"
    if isinstance(v, Leaf):
        return "Leaf"
    if isinstance(v, Node):
        return f"Node({show_value(v.val)}, {show_value(v.left)}, {show_value(v.right)})"
    raise UniverseError(f"not a value: {v!r}")
