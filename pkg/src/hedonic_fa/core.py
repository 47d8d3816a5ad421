"""Domain types and exact welfare arithmetic for FA/EA hedonic games.

Agents are ``0..n-1``. Friend sets are stored as Python ints used as
bitsets, so set algebra in hot loops is a handful of integer ops.

All welfare values are multiples of ``1/n`` under both valuation models,
so they are kept as an integer numerator over the fixed denominator ``n``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, total_ordering
from typing import Iterable, Sequence

MAX_AGENTS = 4096
NPC_EXHAUSTIVE_LIMIT = 15


class ContractError(ValueError):
    """An argument violates an operation's precondition."""


class StructureError(ValueError):
    """An instance does not have the graph structure a routine requires."""


class UnsupportedModelError(ValueError):
    """The routine is only defined for one of the valuation models."""


class Model(str, enum.Enum):
    FA = "FA"
    EA = "EA"


def bits(mask: int) -> list[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def to_mask(agents: Iterable[int]) -> int:
    m = 0
    for a in agents:
        m |= 1 << a
    return m


@total_ordering
@dataclass(frozen=True)
class Welfare:
    """Exact value ``numerator / denominator`` with denominator fixed to n."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ContractError("denominator must be positive")

    def _check(self, other: "Welfare") -> None:
        if not isinstance(other, Welfare):
            raise TypeError(f"cannot combine Welfare with {type(other).__name__}")
        if other.denominator != self.denominator:
            raise ContractError(
                f"welfare denominators differ ({self.denominator} vs {other.denominator})"
            )

    def __add__(self, other: "Welfare") -> "Welfare":
        self._check(other)
        return Welfare(self.numerator + other.numerator, self.denominator)

    def __sub__(self, other: "Welfare") -> "Welfare":
        self._check(other)
        return Welfare(self.numerator - other.numerator, self.denominator)

    def __neg__(self) -> "Welfare":
        return Welfare(-self.numerator, self.denominator)

    def __lt__(self, other: "Welfare") -> bool:
        self._check(other)
        return self.numerator < other.numerator

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Welfare):
            return NotImplemented
        self._check(other)
        return self.numerator == other.numerator

    def __hash__(self) -> int:
        return hash((self.numerator, self.denominator))

    @classmethod
    def zero(cls, n: int) -> "Welfare":
        return cls(0, n)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        return self.numerator / self.denominator

    def to_json(self) -> dict:
        return {"num": self.numerator, "den": self.denominator}

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class Instance:
    """An FA or EA instance; doubles as a declaration profile.

    ``friends[i]`` is the declared friend set of agent ``i``. Enemies are
    implicit: everyone else except ``i``.
    """

    n: int
    model: Model
    friends: tuple[frozenset[int], ...]

    def __init__(self, n: int, friends: Sequence[Iterable[int]], model: Model | str = Model.FA):
        if not 1 <= n <= MAX_AGENTS:
            raise ContractError(f"n must be in 1..{MAX_AGENTS}, got {n}")
        if len(friends) != n:
            raise ContractError(f"expected {n} friend sets, got {len(friends)}")
        fs = []
        for i, f in enumerate(friends):
            f = frozenset(int(j) for j in f)
            if i in f:
                raise ContractError(f"agent {i} lists itself as a friend")
            if any(not 0 <= j < n for j in f):
                raise ContractError(f"agent {i} has a friend id out of range")
            fs.append(f)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "model", Model(model))
        object.__setattr__(self, "friends", tuple(fs))

    @classmethod
    def from_masks(cls, out: Sequence[int], model: Model | str = Model.FA) -> "Instance":
        return cls(len(out), [bits(m) for m in out], model)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], model: Model | str = Model.FA) -> "Instance":
        fs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ContractError(f"edge ({u}, {v}) out of range")
            fs[u].add(v)
        return cls(n, fs, model)

    @cached_property
    def out_masks(self) -> tuple[int, ...]:
        return tuple(to_mask(f) for f in self.friends)

    @cached_property
    def in_masks(self) -> tuple[int, ...]:
        ins = [0] * self.n
        for i, f in enumerate(self.friends):
            for j in f:
                ins[j] |= 1 << i
        return tuple(ins)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        return tuple(o | i for o, i in zip(self.out_masks, self.in_masks))

    @property
    def all_mask(self) -> int:
        return (1 << self.n) - 1

    def enemies(self, i: int) -> frozenset[int]:
        return frozenset(range(self.n)) - self.friends[i] - {i}

    def neighborhood_size(self, i: int) -> int:
        """delta(i): number of agents weakly adjacent to ``i``."""
        return self.neighbor_masks[i].bit_count()

    def edge_degree(self, i: int) -> int:
        """Number of directed friendship edges incident to ``i`` (in + out)."""
        return len(self.friends[i]) + self.in_masks[i].bit_count()

    @property
    def num_friendships(self) -> int:
        return sum(len(f) for f in self.friends)

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in sorted(self.friends[i])]

    def friendships_within(self, mask: int) -> int:
        """Directed friendships with both endpoints inside ``mask``."""
        return sum((self.out_masks[i] & mask).bit_count() for i in bits(mask))

    def with_declaration(self, i: int, friends_i: Iterable[int]) -> "Instance":
        fs = list(self.friends)
        fs[i] = frozenset(friends_i)
        return Instance(self.n, fs, self.model)


def _rgs(assignment: Sequence[int]) -> tuple[int, ...]:
    relabel: dict[int, int] = {}
    out = []
    for a in assignment:
        if a not in relabel:
            relabel[a] = len(relabel)
        out.append(relabel[a])
    return tuple(out)


@dataclass(frozen=True, order=True)
class Partition:
    """A coalition structure in restricted-growth form.

    ``assignment[i]`` is the coalition index of agent ``i``; coalitions are
    numbered by their smallest member, so equal set partitions compare equal.
    """

    assignment: tuple[int, ...]

    def __post_init__(self):
        canon = _rgs(self.assignment)
        if canon != tuple(self.assignment):
            raise ContractError(f"{self.assignment} is not a restricted-growth string")

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        return cls(_rgs(labels))

    @classmethod
    def from_coalitions(cls, n: int, coalitions: Iterable[Iterable[int]]) -> "Partition":
        labels = [-1] * n
        for k, c in enumerate(coalitions):
            for a in c:
                if not 0 <= a < n:
                    raise ContractError(f"agent {a} out of range")
                if labels[a] != -1:
                    raise ContractError(f"agent {a} appears in two coalitions")
                labels[a] = k
        if -1 in labels:
            raise ContractError("coalitions do not cover every agent")
        return cls.from_labels(labels)

    @classmethod
    def from_masks(cls, n: int, masks: Iterable[int]) -> "Partition":
        return cls.from_coalitions(n, (bits(m) for m in masks))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple(range(n)))

    @classmethod
    def grand(cls, n: int) -> "Partition":
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def m(self) -> int:
        return max(self.assignment) + 1 if self.assignment else 0

    @cached_property
    def masks(self) -> tuple[int, ...]:
        ms = [0] * self.m
        for a, k in enumerate(self.assignment):
            ms[k] |= 1 << a
        return tuple(ms)

    def coalitions(self) -> list[frozenset[int]]:
        return [frozenset(bits(m)) for m in self.masks]

    def coalition_of(self, i: int) -> frozenset[int]:
        return frozenset(bits(self.masks[self.assignment[i]]))

    def coalition_mask(self, i: int) -> int:
        return self.masks[self.assignment[i]]

    def to_json(self) -> list[list[int]]:
        return [sorted(c) for c in self.coalitions()]


@dataclass(frozen=True)
class TwoPartition:
    """The pair (P1, P2) used by the approximation mechanism, as bitmasks."""

    p1: int
    p2: int
    n: int = field(compare=False)

    def __post_init__(self):
        full = (1 << self.n) - 1
        if self.p1 & self.p2 or (self.p1 | self.p2) != full:
            raise ContractError("P1 and P2 must partition the agents")
        if self.p1.bit_count() - self.p2.bit_count() not in (0, 1):
            raise ContractError("|P1| - |P2| must be 0 or 1")

    @classmethod
    def from_sets(cls, n: int, p1: Iterable[int], p2: Iterable[int]) -> "TwoPartition":
        return cls(to_mask(p1), to_mask(p2), n)

    @property
    def set1(self) -> frozenset[int]:
        return frozenset(bits(self.p1))

    @property
    def set2(self) -> frozenset[int]:
        return frozenset(bits(self.p2))

    def to_json(self) -> dict:
        return {"p1": bits(self.p1), "p2": bits(self.p2)}


def _check_partition(inst: Instance, part: Partition) -> None:
    if part.n != inst.n:
        raise ContractError(f"partition covers {part.n} agents, instance has {inst.n}")


def utility_num(inst: Instance, i: int, coalition_mask: int) -> int:
    """n * u_i(C) for the coalition given as a bitmask containing ``i``."""
    n = inst.n
    others = coalition_mask & ~(1 << i)
    nf = (inst.out_masks[i] & others).bit_count()
    ne = others.bit_count() - nf
    if inst.model is Model.FA:
        return n * nf - ne
    return nf - n * ne


def utility(inst: Instance, part: Partition, i: int) -> Welfare:
    """u_i of agent ``i`` in its coalition under the instance's model."""
    if not 0 <= i < inst.n:
        raise ContractError(f"agent {i} out of range for n={inst.n}")
    _check_partition(inst, part)
    return Welfare(utility_num(inst, i, part.coalition_mask(i)), inst.n)


def coalition_sw_num(n: int, size: int, friendships: int) -> int:
    """n * SW(C) for an FA coalition from its size and internal friendships."""
    return (n + 1) * friendships - size * (size - 1)


def coalition_sw(inst: Instance, coalition: Iterable[int]) -> Welfare:
    """Welfare of one FA coalition via its size and internal friendship count."""
    if inst.model is not Model.FA:
        raise UnsupportedModelError("coalition_sw uses the FA closed form; sum utilities for EA")
    members = list(coalition)
    if not members:
        raise ContractError("coalition must be nonempty")
    if any(not 0 <= a < inst.n for a in members):
        raise ContractError("coalition member out of range")
    mask = to_mask(members)
    size = mask.bit_count()
    if size != len(members):
        raise ContractError("coalition lists an agent twice")
    return Welfare(coalition_sw_num(inst.n, size, inst.friendships_within(mask)), inst.n)


def _mask_sw_num(inst: Instance, mask: int) -> int:
    if inst.model is Model.FA:
        return coalition_sw_num(inst.n, mask.bit_count(), inst.friendships_within(mask))
    return sum(utility_num(inst, i, mask) for i in bits(mask))


def social_welfare(inst: Instance, part: Partition) -> Welfare:
    _check_partition(inst, part)
    return Welfare(sum(_mask_sw_num(inst, m) for m in part.masks), inst.n)


def cut_value(inst: Instance, coalitions: Sequence[Iterable[int]]) -> Welfare:
    """SW of the union minus the summed SW of the pieces."""
    masks = []
    union = 0
    for c in coalitions:
        m = to_mask(c)
        if m & union:
            raise ContractError("cut pieces must be pairwise disjoint")
        union |= m
        masks.append(m)
    if not masks:
        return Welfare.zero(inst.n)
    whole = _mask_sw_num(inst, union)
    parts = sum(_mask_sw_num(inst, m) for m in masks)
    return Welfare(whole - parts, inst.n)


def component_masks(neighbors: Sequence[int], subset: int) -> list[int]:
    """Weakly connected components of ``subset`` as bitmasks, by min member."""
    comps = []
    rest = subset
    while rest:
        low = rest & -rest
        comp = low
        frontier = low
        while frontier:
            b = frontier & -frontier
            frontier ^= b
            new = neighbors[b.bit_length() - 1] & subset & ~comp
            comp |= new
            frontier |= new
        comps.append(comp)
        rest &= ~comp
    return comps


def weakly_connected_components(inst: Instance, subset: Iterable[int] | None = None) -> list[frozenset[int]]:
    mask = inst.all_mask if subset is None else to_mask(subset)
    return [frozenset(bits(c)) for c in component_masks(inst.neighbor_masks, mask)]


@dataclass(frozen=True)
class NPCResult:
    ok: bool
    witness: tuple[frozenset[int], ...] | None = None
    partial: bool = False

    def __bool__(self) -> bool:
        return self.ok


def satisfies_npc(inst: Instance, part: Partition, max_exhaustive: int = NPC_EXHAUSTIVE_LIMIT) -> NPCResult:
    """Check that no group of coalitions would gain welfare by merging.

    With more than ``max_exhaustive`` coalitions only pairs are tried and the
    result is flagged ``partial``.
    """
    if inst.model is not Model.FA:
        raise UnsupportedModelError("NPC check is defined for FA instances")
    _check_partition(inst, part)
    masks = part.masks
    sw = [_mask_sw_num(inst, m) for m in masks]
    partial = len(masks) > max_exhaustive
    sizes = [2] if partial else range(2, len(masks) + 1)
    for r in sizes:
        for combo in itertools.combinations(range(len(masks)), r):
            union = 0
            for k in combo:
                union |= masks[k]
            if _mask_sw_num(inst, union) > sum(sw[k] for k in combo):
                return NPCResult(False, tuple(frozenset(bits(masks[k])) for k in combo), partial)
    return NPCResult(True, None, partial)
