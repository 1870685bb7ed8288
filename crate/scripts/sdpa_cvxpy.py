#!/usr/bin/env python3
"""Solve an SDPA sparse file with cvxpy and write SDPA-style output.

Usage: sdpa_cvxpy.py problem.dat-s result.out [SOLVER]

The problem is solved in its dual form (maximize Tr(F0 Y) subject to
Tr(Fi Y) = ci, Y psd); the equality multipliers give the primal x.
"""
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def tokens(line):
    for ch in ",(){}":
        line = line.replace(ch, " ")
    return line.split()


def read_sdpa(path):
    with open(path) as f:
        lines = [l.strip() for l in f if l.strip()]
    while lines and lines[0][0] in '"*':
        lines.pop(0)
    m = int(tokens(lines[0])[0])
    nblocks = int(tokens(lines[1])[0])
    sizes = [int(t) for t in tokens(lines[2])[:nblocks]]
    c, rest = [], 3
    while len(c) < m:
        c += [float(t) for t in tokens(lines[rest])]
        rest += 1
    entries = []
    for l in lines[rest:]:
        k, b, i, j, v = l.split()
        entries.append((int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)))
    return m, sizes, np.array(c), entries


def main():
    src, dst = sys.argv[1], sys.argv[2]
    solver = sys.argv[3] if len(sys.argv) > 3 else "SCS"
    m, sizes, c, entries = read_sdpa(src)
    dims = [abs(s) for s in sizes]
    ys = [cp.Variable((n, n), symmetric=True) for n in dims]
    offsets = np.cumsum([0] + [n * n for n in dims])
    rows, cols, vals = [], [], []
    f0 = [np.zeros((n, n)) for n in dims]
    for k, b, i, j, v in entries:
        n = dims[b]
        if k == 0:
            f0[b][i, j] = v
            f0[b][j, i] = v
            continue
        # cp.vec is column-major.
        rows.append(k - 1)
        cols.append(offsets[b] + j * n + i)
        vals.append(v)
        if i != j:
            rows.append(k - 1)
            cols.append(offsets[b] + i * n + j)
            vals.append(v)
    a = sp.csr_matrix((vals, (rows, cols)), shape=(m, offsets[-1]))
    yvec = cp.hstack([cp.vec(y, order="F") for y in ys])
    eq = a @ yvec == c
    cons = [eq]
    for y, s in zip(ys, sizes):
        if s < 0:
            cons.append(y == cp.diag(cp.diag(y)))
            cons.append(cp.diag(y) >= 0)
        else:
            cons.append(y >> 0)
    obj = cp.Maximize(sum(cp.sum(cp.multiply(f, y)) for f, y in zip(f0, ys)))
    prob = cp.Problem(obj, cons)
    opts = {"eps": 1e-9, "max_iters": 200000} if solver == "SCS" else {}
    prob.solve(solver=solver, **opts)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        phase = "pINF_dFEAS" if "infeasible" in prob.status else "noINFO"
        with open(dst, "w") as f:
            f.write(f"phase.value  = {phase}\nobjValPrimal = nan\nobjValDual = nan\n")
        return
    x = np.asarray(eq.dual_value).ravel()
    # Pick the multiplier sign that makes sum F_i x_i - F0 psd.
    best = None
    for sign in (1.0, -1.0):
        xs = sign * x
        lmin = np.inf
        for b, n in enumerate(dims):
            s = -f0[b].copy()
            for k, bb, i, j, v in entries:
                if k > 0 and bb == b:
                    s[i, j] += xs[k - 1] * v
                    if i != j:
                        s[j, i] += xs[k - 1] * v
            lmin = min(lmin, np.linalg.eigvalsh(s)[0])
        if best is None or lmin > best[1]:
            best = (xs, lmin)
    xs, lmin = best
    primal = float(c @ xs)
    dual = float(prob.value)
    phase = "pdOPT" if prob.status == "optimal" else "pdFEAS"
    with open(dst, "w") as f:
        f.write(f"phase.value  = {phase}\n")
        f.write(f"objValPrimal = {primal:.16e}\n")
        f.write(f"objValDual   = {dual:.16e}\n")
        f.write(f"minEigPrimal = {lmin:.16e}\n")
        f.write("xVec = \n{" + ",".join(f"{v:.16e}" for v in xs) + "}\n")


if __name__ == "__main__":
    main()
