"""Residual of the ReLU kernel's differential equation and the norm-preserving weight scale."""

import sys

from _run import RESULTS
from kernel_lens.cli import main

RESULTS.mkdir(exist_ok=True)
codes = [
    main(["ode-check", "--method", "analytic", "--out", str(RESULTS / "ode_analytic.json")]),
    main(["ode-check", "--method", "fd", "--out", str(RESULTS / "ode_fd.json")]),
    main(["init-calc", "--a", "0.2", "--n", "1000", "--out", str(RESULTS / "init_a0.2_n1000.json")]),
    main(["init-calc", "--a", "0.2", "--n", "1000", "--dist", "family=t,nu=5", "--out", str(RESULTS / "init_t5_a0.2_n1000.json")]),
]
sys.exit(max(codes))
