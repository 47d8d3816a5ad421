"""Instance / partition file formats.

Instance JSON::

    {"n": 3, "model": "FA", "friends": [[1], [2], [1]]}

Edge-list text (import only): first line ``n model``, then one ``u v``
line per directed friendship, meaning ``v`` is a friend of ``u``. Blank
lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import ContractError, Instance, Partition, Welfare


def dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False) + "\n"


def instance_to_json(inst: Instance) -> dict:
    return {"n": inst.n, "model": inst.model.value, "friends": [sorted(f) for f in inst.friends]}


def instance_from_json(data: dict) -> Instance:
    try:
        n = int(data["n"])
        friends = data["friends"]
        model = data.get("model", "FA")
    except (KeyError, TypeError) as exc:
        raise ContractError(f"malformed instance JSON: {exc}") from exc
    if not isinstance(friends, list) or len(friends) != n:
        raise ContractError("instance JSON needs exactly n friend lists")
    return Instance(n, friends, model)


def parse_edge_list(text: str) -> Instance:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ContractError("empty edge-list file")
    head = lines[0].split()
    if len(head) not in (1, 2):
        raise ContractError("first line must be 'n model'")
    n = int(head[0])
    model = head[1] if len(head) == 2 else "FA"
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ContractError(f"bad edge line: {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Instance.from_edges(n, edges, model)


def read_instance(path: str | Path) -> Instance:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ContractError(f"invalid JSON in {path}: {exc}") from exc
        return instance_from_json(data)
    try:
        return parse_edge_list(text)
    except ValueError as exc:
        raise ContractError(f"cannot parse {path}: {exc}") from exc


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps(instance_to_json(inst)))


def partition_to_json(part: Partition, sw: Welfare) -> dict:
    return {"coalitions": part.to_json(), "sw": sw.to_json()}


def partition_from_json(data: dict, n: int | None = None) -> tuple[Partition, Welfare]:
    coalitions = data["coalitions"]
    size = n if n is not None else sum(len(c) for c in coalitions)
    part = Partition.from_coalitions(size, coalitions)
    sw = Welfare(int(data["sw"]["num"]), int(data["sw"]["den"]))
    return part, sw
