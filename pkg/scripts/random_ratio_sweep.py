#!/usr/bin/env python3
"""Approximation ratio of the local-search mechanism on random instances.

Writes the benchmark CSV and prints, per n, the worst observed ratio next
to the worst-case bound R(n).
"""

import argparse
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from hedonic_fa.approx import worst_case_ratio_bound
from hedonic_fa.cli import bench_csv
from hedonic_fa.manipulability import threads


@dataclass
class SweepConfig:
    sizes: list[int] = field(default_factory=lambda: list(range(4, 11)))
    seeds: int = 100
    p: float = 0.3
    out: Path = Path("random_sweep.csv")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="*")
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--out", type=Path, default=Path("random_sweep.csv"))
    args = ap.parse_args()
    cfg = SweepConfig(args.n or list(range(4, 11)), args.seeds, args.p, args.out)

    tasks = [("random", n, s, cfg.p) for n in cfg.sizes for s in range(cfg.seeds)]
    text, retention_ok = bench_csv(tasks, threads())
    cfg.out.write_text(text)

    worst: dict[int, Fraction] = defaultdict(lambda: Fraction(1))
    for line in text.splitlines()[1:]:
        cols = line.split(",")
        if cols[8] and cols[8] != "unbounded":
            worst[int(cols[1])] = max(worst[int(cols[1])], Fraction(cols[8]))
    print(f"wrote {len(tasks)} rows to {cfg.out}; friendship retention {'held' if retention_ok else 'VIOLATED'}")
    print(f"{'n':>4} {'worst opt/SW':>13} {'R(n)':>7}")
    for n in cfg.sizes:
        print(f"{n:>4} {float(worst[n]):>13.3f} {float(worst_case_ratio_bound(n)):>7.3f}")


if __name__ == "__main__":
    main()
