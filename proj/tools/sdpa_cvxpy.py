#!/usr/bin/env python3
"""Solve a sparse SDPA feasibility file with cvxpy and write a CSDP-style solution.

Usage: sdpa_cvxpy.py problem.dat-s problem.sol [--solver CLARABEL]

Finds Y >= 0 with F_i . Y = c_i. Negative block sizes are diagonal (LP) blocks.
Writes "infeasible" when the solver proves infeasibility.
"""
import argparse
import re
import sys

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    with open(path) as f:
        lines = [ln for ln in f if ln.strip() and ln.lstrip()[0] not in '"*']
    tokens = lambda s: [t for t in re.split(r"[\s,{}()]+", s) if t]
    m = int(tokens(lines[0])[0])
    nblocks = int(tokens(lines[1])[0])
    sizes = [int(t) for t in tokens(lines[2])[:nblocks]]
    c = np.array([float(t) for t in tokens(lines[3])[:m]])
    entries = []
    for ln in lines[4:]:
        t = tokens(ln)
        entries.append((int(t[0]), int(t[1]) - 1, int(t[2]) - 1, int(t[3]) - 1, float(t[4])))
    return m, sizes, c, entries


def solve(path, solver):
    m, sizes, c, entries = read_sdpa(path)
    blocks = [cp.Variable((s, s), PSD=True) if s > 0 else cp.Variable(-s, nonneg=True) for s in sizes]
    rows = [[] for _ in range(m)]
    for mat, blk, i, j, v in entries:
        if mat == 0:
            continue
        y = blocks[blk]
        if sizes[blk] < 0:
            rows[mat - 1].append(v * y[i])
        elif i == j:
            rows[mat - 1].append(v * y[i, j])
        else:
            rows[mat - 1].append(2 * v * y[i, j])
    if any(not r and c[k] != 0 for k, r in enumerate(rows)):
        return None
    constraints = [cp.sum(cp.hstack(r)) == c[k] for k, r in enumerate(rows) if r]
    # a uniform eigenvalue margin keeps the point away from the boundary of the cone
    t = cp.Variable()
    for y, s in zip(blocks, sizes):
        constraints.append(y - t * np.eye(s) >> 0 if s > 0 else y >= t)
    constraints.append(t <= 1)
    problem = cp.Problem(cp.Maximize(t), constraints)
    problem.solve(solver=solver)
    if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE) or t.value is None or t.value < 0:
        return None
    return sizes, [y.value for y in blocks]


def write_solution(path, result, m):
    with open(path, "w") as f:
        if result is None:
            f.write("infeasible\n")
            return
        sizes, values = result
        f.write(" ".join("0" for _ in range(m)) + "\n")
        for b, (s, v) in enumerate(zip(sizes, values), start=1):
            if s > 0:
                v = 0.5 * (v + v.T)
                for i in range(s):
                    for j in range(i, s):
                        if v[i, j] != 0:
                            f.write(f"2 {b} {i + 1} {j + 1} {v[i, j]:.17g}\n")
            else:
                for i, x in enumerate(v):
                    if x != 0:
                        f.write(f"2 {b} {i + 1} {i + 1} {x:.17g}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem")
    ap.add_argument("solution")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    m = read_sdpa(args.problem)[0]
    write_solution(args.solution, solve(args.problem, args.solver), m)
    return 0


if __name__ == "__main__":
    sys.exit(main())
