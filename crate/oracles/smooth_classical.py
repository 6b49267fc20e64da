# Reference values for the classical smooth min-entropy
#   H_min^eps(A|B) = -log2 min { sum_b max_a q(a,b) : q >= 0, sum q <= 1, sum sqrt(p q) >= sqrt(1 - eps^2) }
import cvxpy as cp
import numpy as np


def hmin_smooth(p, eps):
    p = np.asarray(p, dtype=float)  # rows a, columns b
    q = cp.Variable(p.shape, nonneg=True)
    t = cp.Variable(p.shape[1])
    cons = [cp.sum(q) <= 1,
            cp.sum(cp.multiply(np.sqrt(p), cp.sqrt(q))) >= np.sqrt(1 - eps ** 2)]
    cons += [q[a, :] <= t for a in range(p.shape[0])]
    prob = cp.Problem(cp.Minimize(cp.sum(t)), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return -np.log2(prob.value)


cases = [
    ("three_atoms", [[0.5], [0.25], [0.25]], 0.25),
    ("three_atoms_eps01", [[0.5], [0.25], [0.25]], 0.1),
    ("joint_2x2", [[0.3, 0.1], [0.2, 0.4]], 0.2),
    ("joint_3x2", [[0.35, 0.05], [0.1, 0.2], [0.05, 0.25]], 0.05),
    ("skewed_4", [[0.7], [0.1], [0.1], [0.1]], 0.3),
]
for name, p, eps in cases:
    print(f"{name} eps={eps}: {hmin_smooth(p, eps):.10f}")
