"""Markov-necessity counterexample: brute force at n=3 and symmetry-reduced programs for n<=8.

A = B_1 xor ... xor B_n if C=0, uniform otherwise; B_i uniform n-bit strings.
"""
import itertools
import math

import cvxpy as cp
import numpy as np

EPS = 0.01


def solve(p, mult, eps):
    """min sum_b mult_b max_a q(a,b) over the classical smoothing ball; p[a,b] with column multiplicities."""
    p = np.asarray(p, float)
    q = cp.Variable(p.shape, nonneg=True)
    t = cp.Variable(p.shape[1])
    m = np.asarray(mult, float)
    cons = [cp.sum(q @ m) <= 1,
            cp.sum(cp.multiply(np.sqrt(p), cp.sqrt(q)) @ m) >= math.sqrt(1 - eps ** 2)]
    cons += [q[a, :] <= t for a in range(p.shape[0])]
    prob = cp.Problem(cp.Minimize(m @ t), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-13, tol_gap_rel=1e-13, tol_feas=1e-13)
    return -math.log2(prob.value)


def reduced(n, eps):
    # Every column is a permutation of (heavy, light x (2^n - 1)); by convexity and symmetry the
    # optimum is symmetric.  With q = 2^{-n^2} y the column multiplicity 2^{n^2} cancels.
    heavy = 0.5 + 2.0 ** (-n - 1)
    light = 2.0 ** (-n - 1)
    k = 2 ** n - 1
    y = cp.Variable(2, nonneg=True)
    t = cp.Variable()
    cons = [y[0] + k * y[1] <= 1,
            math.sqrt(heavy) * cp.sqrt(y[0]) + k * math.sqrt(light) * cp.sqrt(y[1]) >= math.sqrt(1 - eps ** 2),
            y[0] <= t, y[1] <= t]
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-14, tol_gap_rel=1e-14, tol_feas=1e-14)
    return -math.log2(prob.value)


def h2(x):
    return 0.0 if x in (0.0, 1.0) else -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def brute(n):
    bs = list(itertools.product(range(2 ** n), repeat=n))
    joint = {}
    for b in bs:
        x = 0
        for v in b:
            x ^= v
        for a in range(2 ** n):
            pr = 2.0 ** (-n * n) * (0.5 * (a == x) + 0.5 * 2.0 ** (-n))
            joint[(a, b)] = pr
    # Per-step infima of H(A_i | B_i) conditioned on a_<i, b_<i, b_>i.
    bit = lambda a, i: (a >> (n - 1 - i)) & 1
    infima = []
    for i in range(n):
        groups = {}
        for (a, b), pr in joint.items():
            key = (a >> (n - i), b[:i], b[i + 1:])
            groups.setdefault(key, {}).setdefault((bit(a, i), b[i]), 0.0)
            groups[key][(bit(a, i), b[i])] += pr
        best = float("inf")
        for g in groups.values():
            tot = sum(g.values())
            pb = {}
            for (ai, bi), pr in g.items():
                pb[bi] = pb.get(bi, 0.0) + pr
            h = 0.0
            for bi, w in pb.items():
                p1 = g.get((1, bi), 0.0) / w
                h += w / tot * h2(p1)
            best = min(best, h)
        infima.append(best)
    # Full table for the smoothing program.
    cols = sorted(set(b for (_, b) in joint))
    p = np.array([[joint[(a, b)] for b in cols] for a in range(2 ** n)])
    return infima, p


if __name__ == "__main__":
    inf3, p3 = brute(3)
    print("n=3 per-step infima", [f"{v:.12f}" for v in inf3], "sum", f"{sum(inf3):.12f}")
    print("n=3 full-table hmin_eps", f"{solve(p3, np.ones(p3.shape[1]), EPS):.10f}")
    for n in range(3, 9):
        print(f"n={n} reduced hmin_eps {reduced(n, EPS):.10f}")
