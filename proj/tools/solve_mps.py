#!/usr/bin/env python3
"""Solve an exported MPS model with HiGHS and compare against an expected objective.

Usage: solve_mps.py MODEL.mps [--expect OBJ] [--tol 1e-6] [--time-limit S]

The objective is rescaled to max|c| = 1 before solving: the model's cost
coefficients sit near 1e-6, below HiGHS's default dual tolerance.
Exit status: 0 on match (or no --expect), 1 on mismatch, 2 if not optimal.
"""

import argparse
import sys

import numpy as np
import highspy


def solve(path, time_limit):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(path) != highspy.HighsStatus.kOk:
        raise SystemExit(f"cannot read {path}")
    lp = h.getLp()
    n = lp.num_col_
    cost = np.asarray(lp.col_cost_, dtype=float)
    scale = 1.0 / np.abs(cost).max() if np.abs(cost).max() > 0 else 1.0
    h.changeColsCost(n, np.arange(n, dtype=np.int32), cost * scale)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 1e-8 * scale)
    h.setOptionValue("time_limit", float(time_limit))
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    info = h.getInfo()
    return status, info.objective_function_value / scale, info.mip_dual_bound / scale


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("model")
    ap.add_argument("--expect", type=float)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--time-limit", type=float, default=600)
    args = ap.parse_args()

    status, obj, bound = solve(args.model, args.time_limit)
    print(f"status {status}\nobjective {obj:.12g}\nbest_bound {bound:.12g}")
    if status != "Optimal":
        return 2
    if args.expect is None:
        return 0
    diff = abs(obj - args.expect)
    print(f"difference {diff:.3g}")
    return 0 if diff <= args.tol else 1


if __name__ == "__main__":
    sys.exit(main())
