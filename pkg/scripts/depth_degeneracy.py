"""cos(theta_j) against depth: exact recursion on a 64-angle grid and simulated networks."""

import sys

from _run import run

codes = []
for a in ("0", "0.2", "0.5"):
    codes.append(run(f"depth_analytic_a{a}", "depth-curve", "--a", a, "--depths", ",".join(str(j) for j in range(1, 129))))
codes.append(run("depth_mc_a0", "depth-curve", "--mode", "mc", "--depths", ",".join(str(j) for j in range(1, 17)), "--grid", "16", "--repeats", "4"))
sys.exit(max(codes))
