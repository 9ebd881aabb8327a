#!/usr/bin/env python3
"""Solve an SDPA sparse file with an external conic solver through cvxpy.

Reads the file as the SDPA dual problem

    max <F0, Y>  s.t.  <F_i, Y> = c_i,  Y psd (negative blocks: Y diagonal >= 0)

and prints the optimal value of that problem and of its negation (the
minimization objective written by `roa export-sdpa`).
"""

import argparse
import json
import re
import sys

import numpy as np
import cvxpy as cp
import scipy.sparse as sp


def tokens(path):
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s or s[0] in '"*':
                continue
            for t in re.split(r"[\s,{}()]+", s):
                if t:
                    yield t


def read_sdpa(path):
    it = tokens(path)
    m = int(next(it))
    nb = int(next(it))
    sizes = [int(next(it)) for _ in range(nb)]
    c = np.array([float(next(it)) for _ in range(m)])
    entries = []
    while True:
        try:
            k = int(next(it))
        except StopIteration:
            break
        b, i, j, v = int(next(it)), int(next(it)), int(next(it)), float(next(it))
        entries.append((k, b - 1, i - 1, j - 1, v))
    return m, sizes, c, entries


def build(m, sizes, c, entries):
    Y = []
    cons = []
    for s in sizes:
        if s > 0:
            v = cp.Variable((s, s), symmetric=True)
            cons.append(v >> 0)
        else:
            v = cp.Variable(-s, nonneg=True)
        Y.append(v)

    # <F, Y> as sparse coefficient rows over each block's flattened variable.
    rows = {b: ([], [], []) for b in range(len(sizes))}
    for k, b, i, j, v in entries:
        s = sizes[b]
        r, cidx, val = rows[b]
        if s > 0:
            if i == j:
                r.append(k); cidx.append(i * s + j); val.append(v)
            else:
                r.append(k); cidx.append(i * s + j); val.append(v)
                r.append(k); cidx.append(j * s + i); val.append(v)
        elif i == j:
            r.append(k); cidx.append(i); val.append(v)
    expr = 0
    for b, s in enumerate(sizes):
        r, cidx, val = rows[b]
        if not r:
            continue
        width = s * s if s > 0 else -s
        A = sp.csr_matrix((val, (r, cidx)), shape=(m + 1, width))
        flat = cp.vec(Y[b], order="C") if s > 0 else Y[b]
        expr = expr + A @ flat
    cons.append(expr[1:] == c)
    return cp.Problem(cp.Maximize(expr[0]), cons)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("file")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    prob = build(*read_sdpa(args.file))
    kw = {}
    if args.solver == "CLARABEL":
        kw = dict(tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9, max_iter=400)
    prob.solve(solver=args.solver, **kw)
    val = prob.value
    out = {"status": prob.status, "sdpa_objective": val,
           "min_objective": None if val is None else -val}
    json.dump(out, sys.stdout)
    print()
    return 0 if prob.status == "optimal" else 2


if __name__ == "__main__":
    sys.exit(main())
