#!/usr/bin/env python3
"""Cone-solver adapter backed by CVXPY.

Usage: cone_solver_cvxpy.py PROGRAM.json SOLUTION.json

Reads a program written by the msso library (objective, triplet equality
matrix, right-hand side, cone list with the bounding entry of each
second-order cone stored last) and writes {"status", "x", "iterations"}.
"""

import json
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def solve(program):
    n = program["n_vars"]
    c = np.asarray(program["objective"], dtype=float)
    eq = program["eq_matrix"]
    trip = np.asarray(eq["triplets"], dtype=float).reshape(-1, 3)
    a = sp.csr_matrix(
        (trip[:, 2], (trip[:, 0].astype(int), trip[:, 1].astype(int))),
        shape=(eq["rows"], eq["cols"]),
    )
    b = np.asarray(program["eq_rhs"], dtype=float)

    x = cp.Variable(n)
    constraints = [a @ x == b]
    for cone in program["cones"]:
        lo, size = cone["offset"], cone["size"]
        if cone["kind"] == "orthant":
            constraints.append(x[lo:lo + size] >= 0)
        else:
            constraints.append(cp.SOC(x[lo + size - 1], x[lo:lo + size - 1]))

    problem = cp.Problem(cp.Minimize(c @ x), constraints)
    solver = cp.CLARABEL if cp.CLARABEL in cp.installed_solvers() else None
    problem.solve(solver=solver)
    iterations = problem.solver_stats.num_iters if problem.solver_stats else 0
    status = {
        cp.OPTIMAL: "optimal",
        cp.OPTIMAL_INACCURATE: "optimal_inaccurate",
    }.get(problem.status, problem.status)
    values = x.value if x.value is not None else np.zeros(n)
    return {"status": status, "x": [float(v) for v in values], "iterations": int(iterations or 0)}


def main(argv):
    if len(argv) != 3:
        sys.stderr.write("usage: cone_solver_cvxpy.py PROGRAM.json SOLUTION.json\n")
        return 2
    with open(argv[1]) as f:
        program = json.load(f)
    result = solve(program)
    with open(argv[2], "w") as f:
        json.dump(result, f)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
