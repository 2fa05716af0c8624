"""Gap to the Gaussian-weight kernel as the input dimension grows, for non-Gaussian weights."""

import sys

from _run import run

M_LIST = "16,64,256,1024"
codes = [
    run("universality_gengauss_b1_relu", "universality", "--dist", "family=gengauss,beta=1", "--m-list", M_LIST),
    run("universality_gengauss_b4_relu", "universality", "--dist", "family=gengauss,beta=4", "--m-list", M_LIST),
    run("universality_gengauss_b4_lrelu", "universality", "--dist", "family=gengauss,beta=4", "--activation", "lrelu", "--a", "0.2", "--m-list", M_LIST),
    run("universality_gengauss_b4_elu", "universality", "--dist", "family=gengauss,beta=4", "--activation", "elu", "--m-list", M_LIST),
    run("universality_laplace_relu", "universality", "--dist", "family=laplace,b=1", "--m-list", M_LIST),
]
sys.exit(max(codes))
