"""Instance families: stars, octopus graphs, almost isolated cliques, the
approximation lower-bound graph, random graphs and the 3-Partition reduction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ContractError, Instance, Model, Partition, StructureError, Welfare, component_masks, to_mask


def gen_star(n: int, inward: bool = False) -> Instance:
    """Star centered at agent 0; edges point at the leaves unless ``inward``."""
    if n < 2:
        raise ContractError("a star needs at least 2 agents")
    if inward:
        return Instance(n, [set()] + [{0} for _ in range(1, n)])
    return Instance(n, [set(range(1, n))] + [set() for _ in range(1, n)])


def _mutual_clique(friends: list[set[int]], members: Iterable[int]) -> None:
    members = set(members)
    for a in members:
        friends[a] |= members - {a}


def check_octopus(inst: Instance, center: int, head: Iterable[int]) -> None:
    """Raise StructureError unless ``inst`` is a center-headed octopus with ``head``."""
    head = frozenset(head)
    n = inst.n
    if not 0 <= center < n or center in head or any(not 0 <= h < n for h in head):
        raise StructureError("head must be a set of non-center agents")
    for j in head:
        if inst.friends[j] != (head - {j}) | {center}:
            raise StructureError(f"head member {j} must befriend exactly the head and the center")
    for k in range(n):
        if k != center and k not in head and inst.friends[k]:
            raise StructureError(f"non-head agent {k} must have no friends")


def check_generalized_octopus(
    inst: Instance, center: int, head: Iterable[int], tentacles: Sequence[Iterable[int]]
) -> None:
    head = frozenset(head)
    tents = [frozenset(t) for t in tentacles]
    n = inst.n
    pieces = [head, *tents]
    covered = frozenset().union(*pieces)
    if sum(len(p) for p in pieces) != len(covered) or covered != frozenset(range(n)) - {center}:
        raise StructureError("head and tentacles must partition the non-center agents")
    if any(not t for t in tents):
        raise StructureError("tentacles must be nonempty")
    for j in head:
        if inst.friends[j] != (head - {j}) | {center}:
            raise StructureError(f"head member {j} must befriend exactly the head and the center")
    for t in tents:
        for k in t:
            if inst.friends[k] != t - {k}:
                raise StructureError(f"tentacle member {k} must befriend exactly its tentacle")


def gen_octopus(n: int, center: int, head: Iterable[int], center_friends: Iterable[int]) -> Instance:
    head = frozenset(head)
    cf = frozenset(center_friends)
    if not 0 <= center < n:
        raise StructureError("center out of range")
    if center in head or center in cf or any(not 0 <= a < n for a in head | cf):
        raise StructureError("head and center friends must be non-center agents")
    friends: list[set[int]] = [set() for _ in range(n)]
    _mutual_clique(friends, head)
    for j in head:
        friends[j].add(center)
    friends[center] = set(cf)
    inst = Instance(n, friends)
    check_octopus(inst, center, head)
    return inst


def gen_generalized_octopus(
    center: int, head: Iterable[int], tentacles: Sequence[Iterable[int]], center_friends: Iterable[int]
) -> Instance:
    head = frozenset(head)
    tents = [frozenset(t) for t in tentacles]
    n = 1 + len(head) + sum(len(t) for t in tents)
    cf = frozenset(center_friends)
    if not 0 <= center < n or center in cf or any(not 0 <= a < n for a in cf):
        raise StructureError("center friends must be non-center agents")
    friends: list[set[int]] = [set() for _ in range(n)]
    if head | frozenset().union(*tents) != frozenset(range(n)) - {center}:
        raise StructureError("head and tentacles must partition the non-center agents")
    _mutual_clique(friends, head)
    for j in head:
        friends[j].add(center)
    for t in tents:
        _mutual_clique(friends, t)
    friends[center] = set(cf)
    inst = Instance(n, friends)
    check_generalized_octopus(inst, center, head, tents)
    return inst


def gen_almost_isolated_clique(
    n: int, clique: Iterable[int], hinge: int, outside_edges: Iterable[tuple[int, int]]
) -> Instance:
    """Mutual clique that touches the rest of the graph only through ``hinge``."""
    clique = frozenset(clique)
    if hinge in clique:
        raise StructureError("hinge must lie outside the clique")
    friends: list[set[int]] = [set() for _ in range(n)]
    _mutual_clique(friends, clique)
    for u, v in outside_edges:
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise StructureError(f"bad edge ({u}, {v})")
        if (u in clique and v not in clique | {hinge}) or (v in clique and u not in clique | {hinge}):
            raise StructureError(f"edge ({u}, {v}) breaks isolation of the clique")
        friends[u].add(v)
    return Instance(n, friends)


def gen_lower_bound(n: int) -> Instance:
    """Path-with-pendants graph on which the approximation mechanism is worst.

    1-indexed, agent i (1 <= i <= ceil(n/2) - 1) befriends i+1 and
    ceil(n/2) + i; shifted down by one here.
    """
    if n < 4:
        raise ContractError("lower-bound family needs n >= 4")
    half = -(-n // 2)
    edges = []
    for i in range(1, half):
        edges.append((i - 1, i))
        edges.append((i - 1, half + i - 1))
    return Instance.from_edges(n, edges)


def lb_block_size(n: int) -> int:
    return 2 * (math.isqrt(n + 1) // 2)


def gen_lb_block_partition(n: int) -> Partition:
    """Explicit good partition of ``gen_lower_bound(n)`` (a lower bound on opt).

    Blocks of even size k = 2*floor(sqrt(n+1)/2) take k/2 consecutive path
    agents and their pendants; the leftover agents form one last block.
    Blocks are then split into weak components, which never lowers welfare;
    at the end of the path the interval construction leaves an agent
    without its edge and this keeps every returned block connected.
    """
    if n < 4:
        raise ContractError("lower-bound family needs n >= 4")
    inst = gen_lower_bound(n)
    half = -(-n // 2)
    k = lb_block_size(n)
    q = n // k
    blocks = []
    for b in range(q):
        lo = b * k // 2
        left = range(lo, lo + k // 2)
        right = range(half + lo, half + lo + k // 2)
        blocks.append(to_mask(itertools.chain(left, right)))
    used = 0
    for m in blocks:
        used |= m
    rest = inst.all_mask & ~used
    if rest:
        blocks.append(rest)
    comps = []
    for m in blocks:
        comps.extend(component_masks(inst.neighbor_masks, m))
    return Partition.from_masks(n, comps)


def gen_random(n: int, p: float, seed: int, model: Model | str = Model.FA) -> Instance:
    """Each ordered pair (i, j), i != j, is a friendship with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ContractError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    draws = rng.random((n, n)) < p
    friends = [[j for j in range(n) if j != i and draws[i, j]] for i in range(n)]
    return Instance(n, friends, model)


# --- 3-Partition reduction -------------------------------------------------


@dataclass(frozen=True)
class ThreePartitionInstance:
    xs: tuple[int, ...]
    m: int
    T: int

    def __init__(self, xs: Sequence[int], T: int):
        xs = tuple(int(x) for x in xs)
        if not xs or len(xs) % 3:
            raise ContractError("3-Partition needs 3m elements")
        m = len(xs) // 3
        if sum(xs) != m * T:
            raise ContractError(f"elements sum to {sum(xs)}, expected m*T = {m * T}")
        bad = [x for x in xs if not (4 * x > T and 2 * x < T)]
        if bad:
            raise ContractError(f"elements {bad} violate T/4 < x < T/2")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "T", int(T))


@dataclass(frozen=True)
class ReducedInstanceLayout:
    element_cliques: tuple[frozenset[int], ...]
    set_cliques: tuple[frozenset[int], ...]
    X: int

    @property
    def m(self) -> int:
        return len(self.set_cliques)

    @property
    def xs(self) -> list[int]:
        return [len(k) for k in self.element_cliques]

    @property
    def n(self) -> int:
        return sum(self.xs) + self.m * self.X

    @property
    def T(self) -> int:
        return sum(self.xs) // self.m

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "element_cliques": [sorted(k) for k in self.element_cliques],
            "set_cliques": [sorted(k) for k in self.set_cliques],
        }


def set_clique_size(m: int, T: int) -> int:
    return 4 * m * m * T


def reduce_3partition(tp: ThreePartitionInstance, x_override: int | None = None) -> tuple[Instance, ReducedInstanceLayout]:
    """Build the FA instance of the NP-hardness reduction.

    Element cliques come first (ids in element order), then the m set
    cliques. Element vertex number g is joined by a mutual edge to vertex
    ``g mod X`` of every set clique, which is the lowest unused vertex when
    X >= mT. ``x_override`` shrinks the set cliques for test-scale layouts
    only; outputs built with it are not faithful reductions.
    """
    m, T = tp.m, tp.T
    X = set_clique_size(m, T) if x_override is None else int(x_override)
    if X < max(tp.xs):
        raise ContractError("set cliques must be at least as large as every element clique")
    elems = []
    start = 0
    for x in tp.xs:
        elems.append(frozenset(range(start, start + x)))
        start += x
    total_elem = start
    sets = [frozenset(range(total_elem + k * X, total_elem + (k + 1) * X)) for k in range(m)]
    n = total_elem + m * X
    friends: list[set[int]] = [set() for _ in range(n)]
    for c in (*elems, *sets):
        _mutual_clique(friends, c)
    for g in range(total_elem):
        for k in range(m):
            v = total_elem + k * X + (g % X)
            friends[g].add(v)
            friends[v].add(g)
    layout = ReducedInstanceLayout(tuple(elems), tuple(sets), X)
    return Instance(n, friends), layout


def sigma_partition(layout: ReducedInstanceLayout, grouping: Sequence[Iterable[int]]) -> Partition:
    """Coalition k = set clique k plus the element cliques assigned to it."""
    groups = [set(g) for g in grouping]
    n_elem = len(layout.element_cliques)
    if len(groups) != layout.m:
        raise ContractError(f"grouping needs {layout.m} groups")
    flat = [h for g in groups for h in g]
    if sorted(flat) != list(range(n_elem)):
        raise ContractError("grouping must partition the element-clique indices")
    coalitions = []
    for k, g in enumerate(groups):
        members = set(layout.set_cliques[k])
        for h in g:
            members |= layout.element_cliques[h]
        coalitions.append(members)
    return Partition.from_coalitions(layout.n, coalitions)


def _realizable(xs: Sequence[int], s: Sequence[int]) -> bool:
    """Can the elements be dealt into groups with exactly the sums ``s``?"""
    order = sorted(range(len(xs)), key=lambda h: -xs[h])
    remaining = list(s)

    def place(idx: int) -> bool:
        if idx == len(order):
            return all(r == 0 for r in remaining)
        x = xs[order[idx]]
        tried = set()
        for k, r in enumerate(remaining):
            if r >= x and r not in tried:
                tried.add(r)
                remaining[k] -= x
                if place(idx + 1):
                    return True
                remaining[k] += x
        return False

    return place(0)


def sigma_constants(layout: ReducedInstanceLayout) -> tuple[int, int, int]:
    """(alpha, beta, gamma): clique friendships, element-to-set friendships
    and element-to-set enemy relations inside any Sigma-partition."""
    xs, m, X = layout.xs, layout.m, layout.X
    alpha = m * X * (X - 1) + sum(x * (x - 1) for x in xs)
    beta = 2 * sum(xs)
    gamma = sum(2 * x * (X - 1) for x in xs)
    return alpha, beta, gamma


def sw_sigma(layout: ReducedInstanceLayout, s: Sequence[int]) -> Welfare:
    """Closed-form welfare of a Sigma-partition with group sums ``s``."""
    xs, m, n = layout.xs, layout.m, layout.n
    s = [int(v) for v in s]
    if len(s) != m or any(v < 0 for v in s) or sum(s) != sum(xs):
        raise ContractError("group sums must be m nonnegative integers summing to mT")
    if not _realizable(xs, s):
        raise ContractError(f"group sums {s} cannot be realized by the elements")
    alpha, beta, gamma = sigma_constants(layout)
    elem_enemies = sum(v * (v - 1) for v in s) - sum(x * (x - 1) for x in xs)
    return Welfare(n * (alpha + beta) - gamma - elem_enemies, n)


def group_sums(layout: ReducedInstanceLayout, grouping: Sequence[Iterable[int]]) -> list[int]:
    xs = layout.xs
    return [sum(xs[h] for h in g) for g in grouping]
