"""Single-layer ReLU kernel: closed-form curve plus simulated networks at 16 angles."""

import sys

from _run import run

codes = [
    run("relu_kernel_curve", "kernel-curve", "--grid", "181"),
    run("relu_gaussian_mc", "mc-verify", "--m", "1000", "--n", "1000", "--theta0-grid", "16", "--repeats", "32"),
    run("relu_t5_mc", "mc-verify", "--dist", "family=t,nu=5,scale=0.7745966692414834", "--theta0-grid", "16"),
    run("lrelu_gengauss_b4_mc", "mc-verify", "--dist", "family=gengauss,beta=4", "--activation", "lrelu", "--a", "0.2", "--m", "1024"),
]
sys.exit(max(codes))
