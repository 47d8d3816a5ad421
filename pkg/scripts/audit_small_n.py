#!/usr/bin/env python3
"""Exhaustive NOM and SP audits of every built-in mechanism at small n."""

import argparse
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from hedonic_fa.manipulability import MECHANISMS, audit_nom, audit_sp


@dataclass
class AuditConfig:
    sizes: list[int] = field(default_factory=lambda: [3, 4])
    mechanisms: list[str] = field(default_factory=lambda: sorted(MECHANISMS))
    out_dir: Path | None = None


def run(cfg: AuditConfig) -> list[dict]:
    rows = []
    for n in cfg.sizes:
        for name in cfg.mechanisms:
            mech = MECHANISMS[name]()
            t0 = time.perf_counter()
            nom = audit_nom(mech, n)
            sp = audit_sp(mech, n)
            row = {
                "mechanism": name,
                "n": n,
                "nom_ok": nom.nom_ok,
                "nom_violations": len(nom.violations),
                "sp_ok": sp.sp_ok,
                "sp_violations": len(sp.violations),
                "seconds": round(time.perf_counter() - t0, 2),
            }
            rows.append(row)
            if cfg.out_dir is not None:
                cfg.out_dir.mkdir(parents=True, exist_ok=True)
                for tag, rep in (("nom", nom), ("sp", sp)):
                    (cfg.out_dir / f"{name}-n{n}-{tag}.json").write_text(json.dumps(rep.to_json()) + "\n")
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="*", default=None, help="sizes up to 5 (5 takes about a minute)")
    ap.add_argument("--mech", nargs="*", choices=sorted(MECHANISMS), default=None)
    ap.add_argument("--out-dir", type=Path)
    args = ap.parse_args()
    cfg = AuditConfig()
    if args.n:
        cfg.sizes = args.n
    if args.mech:
        cfg.mechanisms = args.mech
    cfg.out_dir = args.out_dir
    for r in run(cfg):
        print(
            f"{r['mechanism']:>10} n={r['n']}  NOM {'ok' if r['nom_ok'] else 'VIOLATED'} ({r['nom_violations']})"
            f"  SP {'ok' if r['sp_ok'] else 'VIOLATED'} ({r['sp_violations']})  {r['seconds']} s"
        )


if __name__ == "__main__":
    main()
