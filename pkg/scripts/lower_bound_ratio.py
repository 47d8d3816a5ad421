#!/usr/bin/env python3
"""Welfare of the approximation mechanism on the path-with-pendants family.

Prints, per n, the mechanism's welfare, the welfare of the explicit block
partition and their ratio, plus the number of local-search steps taken.
"""

import argparse
from dataclasses import dataclass, field
from fractions import Fraction

from hedonic_fa.approx import mechanism2
from hedonic_fa.core import social_welfare
from hedonic_fa.generators import gen_lb_block_partition, gen_lower_bound


@dataclass
class LowerBoundConfig:
    sizes: list[int] = field(default_factory=lambda: [8, 16, 32, 64, 256, 1024])


def run(cfg: LowerBoundConfig) -> list[dict]:
    rows = []
    for n in cfg.sizes:
        inst = gen_lower_bound(n)
        tr = mechanism2(inst)
        mech = social_welfare(inst, tr.partition)
        ref = social_welfare(inst, gen_lb_block_partition(n))
        rows.append(
            {
                "n": n,
                "swaps": tr.swaps,
                "moves": tr.moves,
                "sw_mech": mech,
                "sw_block": ref,
                "cap": Fraction(n * n - 1, 4 * n),
                "ratio": ref.as_fraction() / mech.as_fraction(),
            }
        )
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="*", default=None)
    args = ap.parse_args()
    cfg = LowerBoundConfig() if not args.n else LowerBoundConfig(args.n)
    print(f"{'n':>6} {'steps':>6} {'SW mech':>10} {'(n^2-1)/4n':>11} {'SW block':>10} {'ratio':>7}")
    for r in run(cfg):
        print(
            f"{r['n']:>6} {r['swaps'] + r['moves']:>6} {float(r['sw_mech']):>10.3f} {float(r['cap']):>11.3f} "
            f"{float(r['sw_block']):>10.3f} {float(r['ratio']):>7.3f}"
        )


if __name__ == "__main__":
    main()
