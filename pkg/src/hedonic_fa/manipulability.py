"""Exhaustive strategyproofness and non-obvious-manipulability audits.

A declaration profile on n agents is coded as an integer with n*(n-1)
bits: agent a's row occupies bits ``a*(n-1) .. a*(n-1)+n-2`` and bit k of
the row means "a declares its k-th other agent (in id order) a friend".
An audit evaluates the mechanism once per profile, stores every agent's
coalition as a bitmask, and reads all envelopes off that table. Utilities
are always measured under the agent's true type.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .approx import mechanism2, mechanism2_masks
from .core import ContractError, Instance, Model, Partition, Welfare, bits, to_mask
from .exact import GuardError, rgs_strings, solve_optimal

log = logging.getLogger(__name__)

MAX_EXHAUSTIVE_AGENTS = 5


# --- profile coding ----------------------------------------------------------


@lru_cache(maxsize=None)
def _expand_tables(n: int) -> tuple[tuple[int, ...], ...]:
    """expand[a][row] -> n-bit friend mask of agent a."""
    tables = []
    for a in range(n):
        others = [j for j in range(n) if j != a]
        tables.append(tuple(to_mask(others[k] for k in range(n - 1) if (row >> k) & 1) for row in range(1 << (n - 1))))
    return tuple(tables)


def row_of(n: int, a: int, friends: Iterable[int]) -> int:
    row = 0
    for j in friends:
        if j == a or not 0 <= j < n:
            raise ContractError(f"invalid friend {j} for agent {a}")
        row |= 1 << (j if j < a else j - 1)
    return row


def encode_profile(inst: Instance) -> int:
    n = inst.n
    code = 0
    for a in range(n):
        code |= row_of(n, a, inst.friends[a]) << (a * (n - 1))
    return code


def decode_masks(n: int, code: int) -> list[int]:
    exp = _expand_tables(n)
    rmask = (1 << (n - 1)) - 1
    return [exp[a][(code >> (a * (n - 1))) & rmask] for a in range(n)]


def decode_profile(n: int, code: int, model: Model | str = Model.FA) -> Instance:
    return Instance.from_masks(decode_masks(n, code), model)


def profile_count(n: int) -> int:
    return 1 << (n * (n - 1))


# --- mechanisms -----------------------------------------------------------


@dataclass(frozen=True)
class MechanismRef:
    """A deterministic mechanism: full declaration profile -> partition.

    ``masks`` (raw friend masks -> coalition masks) and ``table`` (n ->
    per-profile coalition masks for all agents) are optional fast paths;
    when absent the audit falls back to ``eval``.
    """

    kind: str
    eval: Callable[[Instance], Partition]
    model: Model = Model.FA
    masks: Callable[[int, Sequence[int]], list[int]] | None = field(default=None, compare=False)
    table: Callable[[int], np.ndarray] | None = field(default=None, compare=False)


def _in_nbr(n: int, out: Sequence[int]) -> tuple[list[int], list[int]]:
    inn = [0] * n
    for a, m in enumerate(out):
        for j in bits(m):
            inn[j] |= 1 << a
    return inn, [o | i for o, i in zip(out, inn)]


def _approx_masks(n: int, out: Sequence[int]) -> list[int]:
    inn, nbr = _in_nbr(n, out)
    return mechanism2_masks(n, out, inn, nbr)


def _optimal_table(n: int, model: Model) -> np.ndarray:
    """Canonical optimum of every profile, vectorized over profiles.

    Partitions are ordered by (coalition count, restricted-growth string),
    so the first welfare maximum in that order is the canonical optimum.
    """
    parts = sorted(rgs_strings(n), key=lambda s: (max(s), s))
    width = n * (n - 1)
    enemy_weight = 1 if model is Model.FA else n
    within = np.zeros(len(parts), dtype=np.int64)
    penalty = np.zeros(len(parts), dtype=np.int64)
    coal = np.zeros((len(parts), n), dtype=np.int64)
    for p, s in enumerate(parts):
        masks = [0] * (max(s) + 1)
        for a, k in enumerate(s):
            masks[k] |= 1 << a
        w = 0
        for a in range(n):
            others = [j for j in range(n) if j != a]
            for k, j in enumerate(others):
                if s[j] == s[a]:
                    w |= 1 << (a * (n - 1) + k)
            coal[p, a] = masks[s[a]]
        within[p] = w
        penalty[p] = enemy_weight * sum(m.bit_count() * (m.bit_count() - 1) for m in masks)
    total = 1 << width
    out = np.empty((total, n), dtype=np.int64)
    chunk = 1 << 15
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        f = np.bitwise_count(codes[:, None] & within[None, :]).astype(np.int64)
        sw = (n + 1) * f - penalty[None, :]
        out[start : start + len(codes)] = coal[np.argmax(sw, axis=1)]
    return out


def exact_mechanism() -> MechanismRef:
    return MechanismRef("Exact", lambda inst: solve_optimal(inst).partition, Model.FA, table=lambda n: _optimal_table(n, Model.FA))


def approx_mechanism() -> MechanismRef:
    return MechanismRef("Approx", lambda inst: mechanism2(inst).partition, Model.FA, masks=_approx_masks)


def ea_optimal_mechanism(inst: Instance) -> Partition:
    """Exact EA-welfare maximizer with the same canonical tie-break."""
    if inst.model is not Model.EA:
        raise ContractError("ea_optimal_mechanism expects an EA instance")
    return solve_optimal(inst).partition


def ea_optimal() -> MechanismRef:
    return MechanismRef("EAOptimal", ea_optimal_mechanism, Model.EA, table=lambda n: _optimal_table(n, Model.EA))


def constant_singletons() -> MechanismRef:
    return MechanismRef(
        "ConstantSingletons",
        lambda inst: Partition.singletons(inst.n),
        Model.FA,
        masks=lambda n, out: [1 << a for a in range(n)],
    )


def custom(fn: Callable[[Instance], Partition], model: Model | str = Model.FA, name: str = "Custom") -> MechanismRef:
    return MechanismRef(name, fn, Model(model))


MECHANISMS: dict[str, Callable[[], MechanismRef]] = {
    "exact": exact_mechanism,
    "approx": approx_mechanism,
    "ea-exact": ea_optimal,
    "singletons": constant_singletons,
}


def _outcome_row(mech: MechanismRef, n: int, code: int) -> list[int]:
    out = decode_masks(n, code)
    if mech.masks is not None:
        comps = mech.masks(n, out)
    else:
        comps = mech.eval(Instance.from_masks(out, mech.model)).masks
    row = [0] * n
    for c in comps:
        for a in bits(c):
            row[a] = c
    return row


_TABLES: dict[tuple[str, int], np.ndarray] = {}


def outcome_table(mech: MechanismRef, n: int) -> np.ndarray:
    """Coalition mask of every agent for every profile, shape (2^(n(n-1)), n)."""
    key = (mech.kind, n)
    builtin = mech.kind in ("Exact", "Approx", "EAOptimal", "ConstantSingletons")
    if builtin and key in _TABLES:
        return _TABLES[key]
    if mech.table is not None:
        table = mech.table(n)
    else:
        total = profile_count(n)
        table = np.empty((total, n), dtype=np.int64)
        for code in range(total):
            table[code] = _outcome_row(mech, n, code)
    if builtin:
        _TABLES[key] = table
    return table


# --- utilities and envelopes -------------------------------------------------


def _true_utility(model: Model, n: int, coal: np.ndarray, true_mask: int) -> np.ndarray:
    """n * u_i under the true friend mask, vectorized over coalition masks."""
    nf = np.bitwise_count(coal & true_mask).astype(np.int64)
    others = np.bitwise_count(coal).astype(np.int64) - 1
    if model is Model.FA:
        return (n + 1) * nf - others
    return (n + 1) * nf - n * others


def _by_declaration(arr: np.ndarray, n: int, i: int) -> np.ndarray:
    """Reshape a per-profile array to (agent i's row, everyone else's rows)."""
    r = 1 << (n - 1)
    return np.moveaxis(arr.reshape((r,) * n), n - 1 - i, 0).reshape(r, -1)


@dataclass(frozen=True)
class OutcomeEnvelope:
    best: Welfare
    worst: Welfare
    best_witness: Instance
    worst_witness: Instance
    profiles_evaluated: int
    exhaustive: bool = True


def _check_guard(n: int, override: bool) -> None:
    if n < 2:
        raise ContractError("audits need at least 2 agents")
    if n > MAX_EXHAUSTIVE_AGENTS and not override:
        raise GuardError(
            f"exhaustive audit at n={n} means 2^{(n - 1) ** 2} opponent profiles per envelope; "
            "use sampling mode or override the guard"
        )


def outcome_envelope(
    mech: MechanismRef,
    n: int,
    i: int,
    d_i: Iterable[int],
    true_type: Iterable[int],
    override_guard: bool = False,
) -> OutcomeEnvelope:
    """Best and worst true utility of ``i`` over every opponent profile."""
    _check_guard(n, override_guard)
    if not 0 <= i < n:
        raise ContractError("agent out of range")
    d_row = row_of(n, i, d_i)
    t_mask = to_mask(true_type)
    row_of(n, i, true_type)
    table = outcome_table(mech, n)
    util = _by_declaration(_true_utility(mech.model, n, table[:, i], t_mask), n, i)[d_row]
    codes = _by_declaration(np.arange(profile_count(n), dtype=np.int64), n, i)[d_row]
    jb, jw = int(np.argmax(util)), int(np.argmin(util))
    return OutcomeEnvelope(
        Welfare(int(util[jb]), n),
        Welfare(int(util[jw]), n),
        decode_profile(n, int(codes[jb]), mech.model),
        decode_profile(n, int(codes[jw]), mech.model),
        len(util),
    )


# --- audits -------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    agent: int
    true_type: frozenset[int]
    deviation: frozenset[int]
    condition: str  # "1", "2" or "SP"
    truthful_value: Welfare
    deviating_value: Welfare
    truthful_witness: Instance | None = None
    deviation_witness: Instance | None = None

    def sort_key(self) -> tuple:
        return (
            self.agent,
            len(self.true_type ^ self.deviation),
            sorted(self.true_type),
            sorted(self.deviation),
            self.condition,
        )

    def to_json(self) -> dict:
        from .io import instance_to_json

        out = {
            "agent": self.agent,
            "true_type": sorted(self.true_type),
            "deviation": sorted(self.deviation),
            "condition": self.condition,
            "truthful_value": self.truthful_value.to_json(),
            "deviating_value": self.deviating_value.to_json(),
        }
        if self.truthful_witness is not None:
            out["truthful_witness"] = instance_to_json(self.truthful_witness)
        if self.deviation_witness is not None:
            out["deviation_witness"] = instance_to_json(self.deviation_witness)
        return out


@dataclass
class AuditReport:
    mechanism: str
    n: int
    nom_ok: bool | None
    sp_ok: bool | None
    violations: list[Violation]
    profiles_evaluated: int
    exhaustive: bool = True

    def to_json(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "n": self.n,
            "nom_ok": self.nom_ok,
            "sp_ok": self.sp_ok,
            "exhaustive": self.exhaustive,
            "profiles_evaluated": self.profiles_evaluated,
            "violations": [v.to_json() for v in self.violations],
        }


def _types(n: int, i: int) -> list[tuple[int, frozenset[int]]]:
    """(row code, friend set) for every possible declaration of agent i."""
    exp = _expand_tables(n)[i]
    return [(row, frozenset(bits(exp[row]))) for row in range(1 << (n - 1))]


def _nom_from_utilities(
    n: int, i: int, model: Model, utils: dict[int, np.ndarray], codes: np.ndarray, exhaustive: bool
) -> list[Violation]:
    """Compare envelopes; ``utils[t_row]`` has shape (declarations, samples)."""
    types = _types(n, i)
    found = []
    for t_row, t_set in types:
        u = utils[t_row]
        best, worst = u.max(axis=1), u.min(axis=1)
        argb, argw = u.argmax(axis=1), u.argmin(axis=1)
        for d_row, d_set in types:
            if d_row == t_row:
                continue
            for cond, env, arg, better in (
                ("1", best, argb, best[d_row] > best[t_row]),
                ("2", worst, argw, worst[d_row] > worst[t_row]),
            ):
                if better:
                    found.append(
                        Violation(
                            i,
                            t_set,
                            d_set,
                            cond,
                            Welfare(int(env[t_row]), n),
                            Welfare(int(env[d_row]), n),
                            decode_profile(n, int(codes[t_row, arg[t_row]]), model),
                            decode_profile(n, int(codes[d_row, arg[d_row]]), model),
                        )
                    )
    return found


def audit_nom(
    mech: MechanismRef,
    n: int,
    mode: str = "exhaustive",
    samples: int = 256,
    seed: int = 0,
    override_guard: bool = False,
) -> AuditReport:
    """Check both NOM conditions for every agent, true type and deviation.

    In ``sample`` mode each envelope is estimated from the same ``samples``
    random opponent profiles; a clean result is then not a certificate.
    """
    if mode == "sample":
        return _audit_sampled(mech, n, samples, seed, check_sp=False)
    if mode != "exhaustive":
        raise ContractError(f"unknown audit mode {mode!r}")
    _check_guard(n, override_guard)
    table = outcome_table(mech, n)
    codes_all = np.arange(profile_count(n), dtype=np.int64)
    violations: list[Violation] = []
    for i in range(n):
        codes = _by_declaration(codes_all, n, i)
        utils = {}
        for t_row, t_set in _types(n, i):
            utils[t_row] = _by_declaration(_true_utility(mech.model, n, table[:, i], to_mask(t_set)), n, i)
        violations.extend(_nom_from_utilities(n, i, mech.model, utils, codes, True))
    violations.sort(key=Violation.sort_key)
    evaluated = n * (1 << (n - 1)) * (1 << ((n - 1) ** 2))
    return AuditReport(mech.kind, n, not violations, None, violations, evaluated, True)


def audit_sp(
    mech: MechanismRef,
    n: int,
    mode: str = "exhaustive",
    samples: int = 256,
    seed: int = 0,
    override_guard: bool = False,
) -> AuditReport:
    """Search for a profitable misreport against some fixed opponent profile.

    One violation is kept per (agent, true type, deviation): the one with
    the smallest opponent-profile code.
    """
    if mode == "sample":
        return _audit_sampled(mech, n, samples, seed, check_sp=True)
    if mode != "exhaustive":
        raise ContractError(f"unknown audit mode {mode!r}")
    _check_guard(n, override_guard)
    table = outcome_table(mech, n)
    codes_all = np.arange(profile_count(n), dtype=np.int64)
    violations: list[Violation] = []
    for i in range(n):
        codes = _by_declaration(codes_all, n, i)
        types = _types(n, i)
        for t_row, t_set in types:
            u = _by_declaration(_true_utility(mech.model, n, table[:, i], to_mask(t_set)), n, i)
            truthful = u[t_row]
            for d_row, d_set in types:
                if d_row == t_row:
                    continue
                gain = u[d_row] > truthful
                if gain.any():
                    j = int(np.argmax(gain))
                    violations.append(
                        Violation(
                            i,
                            t_set,
                            d_set,
                            "SP",
                            Welfare(int(truthful[j]), n),
                            Welfare(int(u[d_row, j]), n),
                            decode_profile(n, int(codes[t_row, j]), mech.model),
                            decode_profile(n, int(codes[d_row, j]), mech.model),
                        )
                    )
    violations.sort(key=Violation.sort_key)
    evaluated = n * (1 << (n - 1)) * (1 << ((n - 1) ** 2))
    return AuditReport(mech.kind, n, None, not violations, violations, evaluated, True)


def _audit_sampled(mech: MechanismRef, n: int, samples: int, seed: int, check_sp: bool) -> AuditReport:
    if n < 2:
        raise ContractError("audits need at least 2 agents")
    rng = np.random.default_rng(seed)
    r = 1 << (n - 1)
    violations: list[Violation] = []
    evaluated = 0
    for i in range(n):
        # opponent rows, identical across declarations so envelopes are comparable
        others = rng.integers(0, r, size=(samples, n - 1))
        codes = np.zeros((r, samples), dtype=object)
        for s in range(samples):
            base = 0
            k = 0
            for a in range(n):
                if a == i:
                    continue
                base |= int(others[s, k]) << (a * (n - 1))
                k += 1
            for d_row in range(r):
                codes[d_row, s] = base | (d_row << (i * (n - 1)))
        coal = np.zeros((r, samples), dtype=np.int64)
        for d_row in range(r):
            for s in range(samples):
                coal[d_row, s] = _outcome_row(mech, n, int(codes[d_row, s]))[i]
        evaluated += r * samples
        types = _types(n, i)
        utils = {t_row: _true_utility(mech.model, n, coal, to_mask(t_set)) for t_row, t_set in types}
        if not check_sp:
            violations.extend(_nom_from_utilities(n, i, mech.model, utils, codes, False))
            continue
        for t_row, t_set in types:
            u = utils[t_row]
            for d_row, d_set in types:
                if d_row == t_row:
                    continue
                gain = u[d_row] > u[t_row]
                if gain.any():
                    j = int(np.argmax(gain))
                    violations.append(
                        Violation(
                            i,
                            t_set,
                            d_set,
                            "SP",
                            Welfare(int(u[t_row, j]), n),
                            Welfare(int(u[d_row, j]), n),
                            decode_profile(n, int(codes[t_row, j]), mech.model),
                            decode_profile(n, int(codes[d_row, j]), mech.model),
                        )
                    )
    violations.sort(key=Violation.sort_key)
    ok = not violations
    return AuditReport(mech.kind, n, None if check_sp else ok, ok if check_sp else None, violations, evaluated, False)


# --- adversarial opponent profiles from the NOM arguments --------------------


def _lowest(s: Iterable[int], k: int) -> set[int]:
    return set(sorted(s)[:k])


def construct_best_case_others(i: int, t_i: Iterable[int], n: int, mech_kind: str = "exact") -> Instance:
    """Opponent declarations giving ``i`` its best achievable coalition.

    Exact: ``{i} | F_i`` is a mutual clique and everyone else is isolated.
    Approx with more than ceil(n/2)-1 friends: only the lowest ceil(n/2)-1
    friends form the clique, as coalitions never exceed ceil(n/2).
    """
    if n < 2:
        raise ContractError("need n >= 2")
    f = set(t_i)
    row_of(n, i, f)
    cap = -(-n // 2) - 1
    clique = f if mech_kind == "exact" or len(f) <= cap else _lowest(f, cap)
    friends: list[set[int]] = [set() for _ in range(n)]
    for a in clique:
        friends[a] = (clique - {a}) | {i}
    friends[i] = f
    return Instance(n, friends)


def construct_worst_case_others(
    i: int, t_i: Iterable[int], d_i: Iterable[int], n: int, mech_kind: str = "exact"
) -> Instance:
    """Opponent declarations forcing ``i`` into its worst truthful coalition.

    Exact: an i-centered octopus whose head is the true enemies, padded with
    the lowest true friends up to ceil(n/2) agents. Approx: with at least
    ceil(n/2)-1 enemies, a clique A of that many enemies all befriending i;
    otherwise A is a clique on the complement of (enemies, lowest padding
    friends, i) and the enemies befriend i.
    """
    if n < 3:
        raise ContractError("need n >= 3")
    f = set(t_i)
    row_of(n, i, f)
    d = set(d_i)
    row_of(n, i, d)
    enemies = set(range(n)) - f - {i}
    half = -(-n // 2)
    friends: list[set[int]] = [set() for _ in range(n)]
    if mech_kind == "exact":
        head = enemies if len(enemies) >= half else enemies | _lowest(f, half - len(enemies))
        for a in head:
            friends[a] = (head - {a}) | {i}
    elif mech_kind == "approx":
        if len(enemies) >= half - 1:
            a_set = _lowest(enemies, half - 1)
            for a in a_set:
                friends[a] = (a_set - {a}) | {i}
        else:
            pad = _lowest(f, n // 2 - 1 - len(enemies))
            a_set = set(range(n)) - enemies - pad - {i}
            for a in a_set:
                friends[a] = a_set - {a}
            for e in enemies:
                friends[e] = {i}
    else:
        raise ContractError(f"no worst-case construction for {mech_kind!r}")
    friends[i] = d
    return Instance(n, friends)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("HEDONIC_FA_THREADS", "1")))
    except ValueError:
        return 1
