"""Deterministic (4+o(1))-approximation: greedy 2-partition, swap/move local
search on the number of internal friendships, then weak components per side.

Also the randomized two-sided baseline and the ratio bounds used to check
the approximation guarantee at small n.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .core import (
    ContractError,
    Instance,
    Model,
    Partition,
    TwoPartition,
    UnsupportedModelError,
    Welfare,
    bits,
    component_masks,
    social_welfare,
)


def _greedy_masks(n: int, nbr: Sequence[int]) -> int:
    delta = [m.bit_count() for m in nbr]
    target = -(-n // 2)
    full = (1 << n) - 1
    p1 = 0
    reach = 0
    for _ in range(target):
        cand = reach & ~p1
        if not cand:
            cand = full & ~p1
        best, best_d = -1, -1
        while cand:
            low = cand & -cand
            cand ^= low
            a = low.bit_length() - 1
            if delta[a] > best_d:
                best, best_d = a, delta[a]
        p1 |= 1 << best
        reach |= nbr[best]
    return p1


def greedy_two_partition(inst: Instance) -> TwoPartition:
    """Degree-greedy split into sides of size ceil(n/2) and floor(n/2).

    Grows P1 from a max-delta agent through weak neighbors of max delta,
    reseeding with a max-delta outsider when the frontier runs dry. Ties go
    to the smallest id.
    """
    p1 = _greedy_masks(inst.n, inst.neighbor_masks)
    return TwoPartition(p1, inst.all_mask & ~p1, inst.n)


def _deg(out: Sequence[int], inn: Sequence[int], a: int, side: int) -> int:
    return (out[a] & side).bit_count() + (inn[a] & side).bit_count()


def _improve_masks(
    out: Sequence[int], inn: Sequence[int], p1: int, p2: int, on_step: Callable[[str, int, int, int, int], None] | None = None
) -> tuple[int, int, int, int]:
    swaps = moves = 0
    while True:
        b_side = bits(p2)
        gain_b = [_deg(out, inn, b, p1) - _deg(out, inn, b, p2 & ~(1 << b)) for b in b_side]
        done = True
        for a in bits(p1):
            ga = _deg(out, inn, a, p2) - _deg(out, inn, a, p1 & ~(1 << a))
            for b, gb in zip(b_side, gain_b):
                # the a-b edges stay cut either way
                w = ((out[a] >> b) & 1) + ((out[b] >> a) & 1)
                if ga + gb - 2 * w > 0:
                    np1 = (p1 & ~(1 << a)) | (1 << b)
                    np2 = (p2 & ~(1 << b)) | (1 << a)
                    if on_step:
                        on_step("swap", p1, p2, np1, np2)
                    p1, p2 = np1, np2
                    swaps += 1
                    done = False
                    break
            if not done:
                break
        if done:
            break
    if p1.bit_count() == p2.bit_count():
        return p1, p2, swaps, moves
    while True:
        done = True
        for a in bits(p1):
            if _deg(out, inn, a, p2) - _deg(out, inn, a, p1 & ~(1 << a)) > 0:
                # the receiving side becomes the larger one
                np1, np2 = p2 | (1 << a), p1 & ~(1 << a)
                if on_step:
                    on_step("move", p1, p2, np1, np2)
                p1, p2 = np1, np2
                moves += 1
                done = False
                break
        if done:
            break
    return p1, p2, swaps, moves


def improve_sw(inst: Instance, tp: TwoPartition, check: bool = False) -> tuple[TwoPartition, int, int]:
    """Local search: first-improvement swaps, then (if sizes differ) moves.

    Pairs are scanned in lexicographic (P1 agent, P2 agent) order and moves
    in P1 id order; the scan restarts after every executed step. A step is
    taken only if it strictly raises the number of internal friendships.
    With ``check`` every step is verified to change SW by exactly
    (gain in friendships) * (1 + 1/n).
    """
    on_step = None
    if check:
        def on_step(kind, p1, p2, np1, np2):
            n = inst.n
            before = Partition.from_masks(n, [m for m in (p1, p2) if m])
            after = Partition.from_masks(n, [m for m in (np1, np2) if m])
            df = (inst.friendships_within(np1) + inst.friendships_within(np2)) - (
                inst.friendships_within(p1) + inst.friendships_within(p2)
            )
            dsw = social_welfare(inst, after) - social_welfare(inst, before)
            assert df > 0, f"{kind} step did not add friendships"
            assert dsw.numerator == df * (n + 1), f"{kind} step broke the SW/friendship identity"

    p1, p2, swaps, moves = _improve_masks(inst.out_masks, inst.in_masks, tp.p1, tp.p2, on_step)
    return TwoPartition(p1, p2, inst.n), swaps, moves


@dataclass(frozen=True)
class ApproxTrace:
    initial: TwoPartition
    swaps: int
    moves: int
    final_two_partition: TwoPartition
    partition: Partition
    friendships_within: int
    total_friendships: int

    def to_json(self) -> dict:
        return {
            "initial": self.initial.to_json(),
            "swaps": self.swaps,
            "moves": self.moves,
            "final_two_partition": self.final_two_partition.to_json(),
            "friendships_within": self.friendships_within,
            "total_friendships": self.total_friendships,
        }


def mechanism2_masks(n: int, out: Sequence[int], inn: Sequence[int], nbr: Sequence[int]) -> list[int]:
    """Coalition bitmasks of the approximation mechanism on raw adjacency."""
    p1 = _greedy_masks(n, nbr)
    p2 = ((1 << n) - 1) & ~p1
    p1, p2, _, _ = _improve_masks(out, inn, p1, p2)
    return component_masks(nbr, p1) + component_masks(nbr, p2)


def mechanism2(inst: Instance, check: bool = False) -> ApproxTrace:
    if inst.model is not Model.FA:
        raise UnsupportedModelError("the approximation mechanism is defined for FA")
    init = greedy_two_partition(inst)
    final, swaps, moves = improve_sw(inst, init, check=check)
    nbr = inst.neighbor_masks
    comps = component_masks(nbr, final.p1) + component_masks(nbr, final.p2)
    part = Partition.from_masks(inst.n, comps)
    within = inst.friendships_within(final.p1) + inst.friendships_within(final.p2)
    return ApproxTrace(init, swaps, moves, final, part, within, inst.num_friendships)


def _side(seed: int, agent: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{agent}".encode(), digest_size=8).digest()
    return digest[0] & 1


def rand_mech(inst: Instance, seed: int) -> Partition:
    """Randomized baseline: fair coin per agent, then weak components per side.

    Each coin is a hash of (seed, agent), so results do not depend on the
    order agents are visited.
    """
    if inst.model is not Model.FA:
        raise UnsupportedModelError("the randomized baseline is defined for FA")
    side0 = 0
    for a in range(inst.n):
        if _side(seed, a) == 0:
            side0 |= 1 << a
    side1 = inst.all_mask & ~side0
    nbr = inst.neighbor_masks
    return Partition.from_masks(inst.n, component_masks(nbr, side0) + component_masks(nbr, side1))


def approximation_ratio(inst: Instance, opt_or_bound: Welfare, mech_sw: Welfare) -> Fraction | float:
    """Exact ratio reference / mechanism; ``math.inf`` when unbounded."""
    if mech_sw.numerator <= 0:
        if opt_or_bound.numerator > 0:
            return math.inf
        if opt_or_bound.numerator == mech_sw.numerator:
            return Fraction(1)
        raise ContractError("ratio undefined for a nonpositive mechanism welfare")
    return opt_or_bound.as_fraction() / mech_sw.as_fraction()


# --- approximation guarantee bookkeeping ---------------------------------


def retains_friendships(n: int, f_within: int, f: int) -> bool:
    """(2n-1) f_within >= (n-2) f, the friendship retention guarantee."""
    return (2 * n - 1) * f_within >= (n - 2) * f


def sw_lower_bound(n: int, f_pi: int) -> Fraction:
    """Smallest welfare a mechanism output with ``f_pi`` internal friendships
    can have, per the three-case analysis (coalitions are at most ceil(n/2))."""
    c, fl = -(-n // 2), n // 2
    f = Fraction(f_pi)
    if f_pi <= c - 1:
        return f * (1 - f / n)
    if f_pi <= n - 2:
        return f * (1 + Fraction(1, n)) - Fraction(c * (c - 1), n) - Fraction((f_pi - c + 2) * (f_pi - c + 1), n)
    return f * (1 + Fraction(1, n)) - Fraction(fl * fl + c * c, n) + 1


def case_ratio_bound(n: int, f_pi: int) -> Fraction:
    """Upper bound on opt / SW given ``f_pi``: opt <= f <= (2n-1)/(n-2) f_pi."""
    if n < 3:
        raise ContractError("the ratio bound needs n >= 3")
    if f_pi <= 0:
        raise ContractError("the ratio bound needs f_pi >= 1")
    return Fraction(2 * n - 1, n - 2) * f_pi / sw_lower_bound(n, f_pi)


def worst_case_ratio_bound(n: int) -> Fraction:
    """R(n): the largest case bound over every possible f_pi.

    Case 3 is decreasing in f_pi, so f_pi up to n-1 covers all cases.
    """
    return max(case_ratio_bound(n, f) for f in range(1, n))


def closed_form_case_bounds(n: int) -> dict[str, Fraction]:
    """The simplified per-case bounds that close the approximation argument.

    ``case1``, ``case2_high`` and ``case3`` dominate ``case_ratio_bound`` on
    their ranges. ``case2_low`` substitutes (n-1)/2 for ceil(n/2) where
    (n+1)/2 is needed, so it sits below the exact bound at f_pi = ceil(n/2);
    it is kept for comparison only.
    """
    c = -(-n // 2)
    out = {"case1": Fraction(2 * n * (2 * n - 1), (n - 2) * (n - 1))}
    if c <= n - 2:
        out["case2_low"] = Fraction(2 * n * (2 * n - 1) * (n - 1), (n - 2) * (n * n + 4 * n - 13))
        out["case2_high"] = Fraction(2 * n * (2 * n - 1), n * n - 5)
    out["case3"] = Fraction(2 * n * (2 * n - 1) * (n - 1), (n - 2) * (n * n - 3 + 2 * n))
    return out
