"""Histograms of ||h_j(x)|| / ||x|| for an LReLU network under the two initializations."""

import sys

from _run import run

codes = [run(f"norm_ratio_{init}", "norm-hist", "--a", "0.2", "--init", init, "--depths", "1,2,4,8,16,32") for init in ("eq8", "he")]
sys.exit(max(codes))
