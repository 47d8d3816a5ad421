"""Welfare-optimal mechanism with canonical tie-breaking.

Among all SW-maximizing partitions the solver returns the one with the
fewest coalitions, and among those the lexicographically smallest
restricted-growth string.

The default solver splits FA instances into weakly connected components
(an optimum never joins two components: the merged coalition only adds
enemy pairs) and runs an exact subset DP on each component. The
combination of per-component canonical optima is the global canonical
optimum, since restricted-growth order restricted to one component agrees
with the global order. ``solve_by_enumeration`` is a plain scan over all
set partitions, kept as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .core import (
    ContractError,
    Instance,
    Model,
    Partition,
    Welfare,
    bits,
    component_masks,
    to_mask,
    utility_num,
)

MAX_EXACT_AGENTS = 15


class GuardError(RuntimeError):
    """Refusal to run an exponential routine above its size guard."""


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def _guard(n: int, override: bool) -> None:
    if n > MAX_EXACT_AGENTS and not override:
        raise GuardError(
            f"exact search over {n} agents means ~{bell(n):.3e} partitions "
            f"(guard is {MAX_EXACT_AGENTS}); pass override_guard=True to force it"
        )


def rgs_strings(n: int) -> Iterator[tuple[int, ...]]:
    """All restricted-growth strings of length n in lexicographic order."""
    if n < 1:
        raise ContractError("n must be at least 1")
    a = [0] * n
    pmax = [0] * n  # pmax[i] = max(a[0..i])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] > pmax[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        pmax[i] = max(pmax[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            pmax[j] = pmax[i]


def enumerate_partitions(n: int, override_guard: bool = False) -> Iterator[Partition]:
    _guard(n, override_guard)
    for s in rgs_strings(n):
        yield Partition(s)


@dataclass(frozen=True)
class ExactSolveResult:
    partition: Partition
    opt_value: Welfare
    optima_count: int
    # candidate evaluations: (subset, block) pairs for the DP, partitions for enumeration
    partitions_examined: int

    def to_json(self) -> dict:
        return {
            "coalitions": self.partition.to_json(),
            "sw": self.opt_value.to_json(),
            "optima_count": self.optima_count,
            "partitions_examined": self.partitions_examined,
        }


def _block_values(inst: Instance, members: Sequence[int]) -> list[int]:
    """n * SW of every subset of ``members`` (indexed by local bitmask)."""
    n, k = inst.n, len(members)
    local = {a: li for li, a in enumerate(members)}
    lout = [to_mask(local[j] for j in inst.friends[a] if j in local) for a in members]
    lin = [0] * k
    for li, m in enumerate(lout):
        for lj in bits(m):
            lin[lj] |= 1 << li
    f = [0] * (1 << k)
    vals = [0] * (1 << k)
    # per-agent utilities summed over a coalition reduce to these closed forms
    enemy_weight = 1 if inst.model is Model.FA else n
    for s in range(1, 1 << k):
        low = s & -s
        li = low.bit_length() - 1
        rest = s ^ low
        f[s] = f[rest] + (lout[li] & rest).bit_count() + (lin[li] & rest).bit_count()
        c = s.bit_count()
        vals[s] = (n + 1) * f[s] - enemy_weight * c * (c - 1)
    return vals


def _solve_group(inst: Instance, members: Sequence[int]) -> tuple[int, tuple[int, ...], int, int]:
    """Exact canonical optimum over ``members``.

    Returns (n*SW, local restricted-growth string, number of optima, work).
    """
    k = len(members)
    vals = _block_values(inst, members)
    size = 1 << k
    best_val = [0] * size
    best_cnt = [0] * size
    n_opt = [0] * size
    rgs: list[tuple[int, ...]] = [()] * size
    n_opt[0] = 1
    work = 0
    for s in range(1, size):
        low = s & -s
        rest = s ^ low
        bv = None
        bc = 0
        nopt = 0
        choices: list[int] = []
        sub = rest
        while True:
            blk = sub | low
            r = s ^ blk
            v = vals[blk] + best_val[r]
            c = best_cnt[r] + 1
            if bv is None or v > bv:
                bv, bc, nopt, choices = v, c, n_opt[r], [blk]
            elif v == bv:
                nopt += n_opt[r]
                if c < bc:
                    bc, choices = c, [blk]
                elif c == bc:
                    choices.append(blk)
            work += 1
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best_val[s], best_cnt[s], n_opt[s] = bv, bc, nopt
        elems = bits(s)
        best = None
        for blk in choices:
            sub_rgs = iter(rgs[s ^ blk])
            cand = tuple(0 if (blk >> e) & 1 else 1 + next(sub_rgs) for e in elems)
            if best is None or cand < best:
                best = cand
        rgs[s] = best
    full = size - 1
    return best_val[full], rgs[full], n_opt[full], work


def solve_optimal(inst: Instance, override_guard: bool = False, decompose: bool | None = None) -> ExactSolveResult:
    """Welfare-optimal mechanism: max SW, fewest coalitions, then smallest RGS.

    Component decomposition is on by default for FA and off for EA.
    """
    if decompose is None:
        decompose = inst.model is Model.FA
    if decompose and inst.model is not Model.FA:
        raise ContractError("component decomposition is only valid for FA")
    groups = component_masks(inst.neighbor_masks, inst.all_mask) if decompose else [inst.all_mask]
    total, count, work = 0, 1, 0
    labels = [0] * inst.n
    for g, gmask in enumerate(groups):
        members = bits(gmask)
        _guard(len(members), override_guard)
        val, local_rgs, nopt, w = _solve_group(inst, members)
        total += val
        count *= nopt
        work += w
        for a, lab in zip(members, local_rgs):
            labels[a] = (g, lab)
    # relabel (group, block) pairs to a restricted-growth string
    return ExactSolveResult(Partition.from_labels(labels), Welfare(total, inst.n), count, work)


def solve_by_enumeration(inst: Instance, override_guard: bool = False) -> ExactSolveResult:
    """Reference optimum: scan every set partition, summing per-agent utilities."""
    n = inst.n
    _guard(n, override_guard)
    best_val = None
    best_m = 0
    best_rgs: tuple[int, ...] = ()
    count = examined = 0
    for s in rgs_strings(n):
        examined += 1
        m = max(s) + 1
        masks = [0] * m
        for a, k in enumerate(s):
            masks[k] |= 1 << a
        v = sum(utility_num(inst, a, masks[k]) for a, k in enumerate(s))
        if best_val is None or v > best_val:
            best_val, best_m, best_rgs, count = v, m, s, 1
        elif v == best_val:
            count += 1
            if m < best_m:  # lex order of the scan keeps the first of equal m
                best_m, best_rgs = m, s
    return ExactSolveResult(Partition(best_rgs), Welfare(best_val, n), count, examined)


def octopize(inst: Instance, part: Partition, center: int) -> Instance:
    """Turn ``inst`` into the center-headed generalized octopus induced by ``part``.

    The head (the center's coalition minus the center) and every other
    coalition become mutual cliques, head members befriend the center, and
    all other cross edges go away. The center's own declaration is kept.
    """
    if part.n != inst.n:
        raise ContractError("partition size does not match instance")
    if not 0 <= center < inst.n:
        raise ContractError("center out of range")
    friends: list[frozenset[int]] = [frozenset()] * inst.n
    for c in part.coalitions():
        if center in c:
            head = c - {center}
            for h in head:
                friends[h] = (head - {h}) | {center}
        else:
            for t in c:
                friends[t] = c - {t}
    friends[center] = inst.friends[center]
    return Instance(inst.n, friends, inst.model)


def expected_octopus_partition(n: int, center: int, head: frozenset[int] | set[int]) -> Partition:
    core = set(head) | {center}
    return Partition.from_coalitions(n, [sorted(core)] + [[a] for a in range(n) if a not in core])


def verify_octopus_optimum(inst: Instance, center: int, head: set[int] | frozenset[int]) -> bool:
    """Does the solver return the head coalition plus singletons, uniquely?"""
    from .generators import check_octopus

    check_octopus(inst, center, head)
    res = solve_optimal(inst)
    return res.partition == expected_octopus_partition(inst.n, center, frozenset(head)) and res.optima_count == 1


def check_gen_octopus_head_bound(
    inst: Instance, center: int, head: set[int] | frozenset[int], tentacles: Sequence[set[int] | frozenset[int]]
) -> bool:
    """Strict head-size bound for a head+tentacles output of the solver.

    If the solver returns exactly {head + center, tentacles...}, checks
    ``|H| > |F_center & T_l| / |T_l| * (n+1)/2 - 1`` for every tentacle.
    Returns True vacuously when the solver picks some other partition.
    """
    from .generators import check_generalized_octopus

    check_generalized_octopus(inst, center, head, tentacles)
    n = inst.n
    expected = Partition.from_coalitions(n, [sorted(set(head) | {center})] + [sorted(t) for t in tentacles])
    if solve_optimal(inst).partition != expected:
        return True
    h = len(head)
    fc = inst.friends[center]
    # |H| + 1 > g (n+1) / (2|T|)  <=>  2|T|(|H|+1) > g(n+1)
    return all(2 * len(t) * (h + 1) > len(fc & set(t)) * (n + 1) for t in tentacles)
