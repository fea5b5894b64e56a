#!/usr/bin/env python3
"""Generate uniform random 3-SAT fixtures in the SATLIB uf layout.

Each clause draws three distinct variables uniformly and negates each with
probability 1/2. Unsatisfiable draws are rejected with a complete solver
(pycosat), so every emitted file is satisfiable, like the uf families.

usage: gen_rnd3sat.py OUT_DIR [--per-group 20] [--seed 20190501]
"""
import argparse
import pathlib
import random

import pycosat

FAMILIES = [(50, 218), (75, 325), (100, 430), (125, 538)]


def draw(rng, n, m):
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), 3)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return clauses


def render(n, m, clauses, index):
    lines = [
        "c uniform random 3-SAT, generated locally (uf recipe)",
        f"c instance {index} of family uf{n}-{m}",
        "c satisfiable: yes (checked with a complete solver)",
        "c clause length = 3",
        "c",
        f"p cnf {n}  {m} ",
    ]
    for c in clauses:
        lines.append(" " + " ".join(str(l) for l in c) + " 0")
    lines += ["%", "0", ""]
    return "\n".join(lines)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--per-group", type=int, default=20)
    ap.add_argument("--seed", type=int, default=20190501)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    root = pathlib.Path(args.out)
    for n, m in FAMILIES:
        fam = root / f"uf{n}-{m}"
        fam.mkdir(parents=True, exist_ok=True)
        kept = 0
        while kept < args.per_group:
            clauses = draw(rng, n, m)
            if pycosat.solve(clauses) == "UNSAT":
                continue
            kept += 1
            (fam / f"uf{n}-{kept:02d}.cnf").write_text(render(n, m, clauses, kept))


if __name__ == "__main__":
    main()
