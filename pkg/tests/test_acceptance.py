"""End-to-end acceptance checks, one test per criterion, each at its stated tolerance.

Every test records a one-line verdict that is printed in the pytest summary.
"""

import math
import time

import numpy as np
import pytest

from kernel_lens import experiments
from kernel_lens.analytic import (
    Activation,
    KernelQuery,
    angle_map_derivative,
    arc_cosine_kernel,
    contraction_derivative_magnitude,
    depth_trace,
    lrelu_kernel,
    ode_forcing_residual,
    signal_distance_ratio,
)
from kernel_lens.diagnostics import (
    SequenceScheme,
    dataset_curve,
    hyp_statistic,
    hyp_statistic_quartic,
    one_hot_vectors,
    random_phase_sinusoids,
    subsample_sequence,
)
from kernel_lens.distributions import (
    Gaussian,
    GeneralizedGaussian,
    Laplace,
    MultivariateT,
    Uniform,
    calibrate,
    sample_matrix,
    second_moment,
)
from kernel_lens.simulate import NetworkConfig, empirical_kernel, make_angle_pair, universality_sweep


def test_criterion_01_normalized_relu_kernel(record):
    start = time.perf_counter()
    table = experiments.normalized_relu_check(m=1000, n=1000, grid=16, seed=0, repeats=32, tol=0.02, workers=1)
    elapsed = time.perf_counter() - start
    err = np.abs(table.column("normalized_mc") - table.column("normalized_analytic")).max()
    ok = err <= 0.02 and elapsed < 30.0
    assert record(1, ok, f"max |normalized error| {err:.4f} <= 0.02 over 16 angles; {elapsed:.1f} s single-threaded (< 30 s)")


def test_criterion_02_t_weights(record):
    dist = calibrate(MultivariateT(5.0), 1.0)
    table = experiments.mc_verify(dist, Activation.relu(), m=1000, n=1000, grid=16, seed=0)
    z = np.abs(table.column("z_score")).max()
    assert record(2, z <= 4.0, f"multivariate t nu=5, max |z| {z:.3f} <= 4 over 16 angles")


def test_criterion_03_universality(record):
    details, ok = [], True
    for beta in (1.0, 4.0):
        pts = universality_sweep(GeneralizedGaussian(1.0, beta), Activation.relu(), math.pi / 2, [16, 64, 256, 1024], 100_000, seed=0)
        first, last = pts[0].gap, pts[-1].gap
        ok &= last < first and last < 0.02
        details.append(f"beta={beta:g}: gap {first:.5f} (m=16) -> {last:.5f} (m=1024)")
    assert record(3, ok, "; ".join(details) + "; need shrinking and final < 0.02")


def test_criterion_04_lrelu_universality(record):
    act = Activation.lrelu(0.2)
    table = experiments.mc_verify(GeneralizedGaussian(1.0, 4.0), act, m=1024, n=1000, grid=16, seed=0)
    z = np.abs(table.column("z_score")).max()
    (p,) = universality_sweep(GeneralizedGaussian(1.0, 4.0), act, math.pi / 2, [1024], 100_000, seed=0)
    ok = z <= 4.0 and abs(p.kernel_z) <= 4.0
    assert record(4, ok, f"gengauss beta=4, lrelu a=0.2, m=1024: max |z| {z:.3f} over 16 angles (n=1e3), |z| {abs(p.kernel_z):.3f} at pi/2 (n=1e5)")


def test_criterion_05_elu_universality(record):
    (p,) = universality_sweep(GeneralizedGaussian(1.0, 4.0), Activation.elu(), math.pi / 2, [1024], 100_000, seed=0, oracle_n=1_000_000)
    z = abs(p.kernel_z)
    assert record(5, z <= 3.0, f"gengauss beta=4, elu, m=1024: |kernel - Gaussian oracle| = {z:.3f} combined stderr (<= 3)")


def test_criterion_06_fixed_point(record):
    # every clause is asserted except theta_128 < 0.1 at a = 0.2, which the exact
    # recursion does not reach (see the strict xfail below); the verdict line reports it
    attained, parts = True, []
    relu = depth_trace(math.pi / 2, 0.0, 128)
    leaky = depth_trace(math.pi / 2, 0.2, 128)
    for a, tr in ((0.0, relu), (0.2, leaky)):
        dec = bool(np.all(np.diff(tr.angles) < 0))
        attained &= dec
        parts.append(f"a={a:g}: decreasing={dec}, theta_128={tr.angles[-1]:.4f}")
    attained &= relu.angles[-1] < 0.1
    z = np.linspace(-1.0, 1.0, 10_000)
    worst = max(
        max(np.max(contraction_derivative_magnitude(z, a)), np.max(np.abs(angle_map_derivative(z, a))))
        for a in (0.0, 0.2, 0.5)
    )
    attained &= worst <= 1.0
    table = experiments.depth_curve(a=0.0, depths=range(1, 17), mode="mc", grid=8, m=1000, n=1000, seed=0, repeats=4)
    mc_err = table.column("abs_error").max()
    attained &= mc_err <= 0.05
    parts.append(f"max |T'| {worst:.6f} <= 1; depth MC J<=16 max error {mc_err:.4f} <= 0.05")
    full = attained and leaky.angles[-1] < 0.1
    if not full and attained:
        parts.append("only theta_128 < 0.1 at a=0.2 is missed")
    record(6, full, "; ".join(parts))
    assert attained


@pytest.mark.xfail(strict=True, reason="exact recursion gives theta_128 = 0.1069 at a = 0.2; small-angle rate 3 pi (1+a^2) / ((1-a)^2 j)")
def test_criterion_06_leaky_angle_below_tenth_at_depth_128():
    assert depth_trace(math.pi / 2, 0.2, 128).angles[-1] < 0.1


def test_criterion_07_signal_distance(record):
    ok, worst_final = True, 0.0
    for a in (0.0, 0.2, 0.5):
        for theta0 in np.linspace(0.0, math.pi, 33):
            tr = depth_trace(float(theta0), a, 128)
            d = signal_distance_ratio(tr.angles)
            ok &= bool(np.all(np.diff(d[1:]) <= 1e-15))
            if a == 0.0:
                worst_final = max(worst_final, d[128])
    ok &= worst_final < 0.02
    assert record(7, ok, f"non-increasing after j=1 on 99 traces; a=0 worst distance at j=128 {worst_final:.5f} < 0.02")


def test_criterion_08_norm_preserving_init(record):
    means = {}
    for init in ("eq8", "he"):
        table = experiments.norm_hist(a=0.2, init=init, depths=(32,), count=1000, m=1000, n=1000, seed=0, networks=50)
        means[init] = float(table.notes[0].split("mean_ratio=")[1].split()[0])
    ok = 0.9 <= means["eq8"] <= 1.1 and 1.6 <= means["he"] <= 2.2
    assert record(8, ok, f"depth 32 mean ratio: eq8 {means['eq8']:.4f} in [0.9, 1.1], he {means['he']:.4f} in [1.6, 2.2] (predicted {1.04**16:.4f})")


def test_criterion_09_ode(record):
    q = KernelQuery(math.pi / 2)
    exact = ode_forcing_residual(q, 64, "analytic")
    fd = ode_forcing_residual(q, 64, "fd")
    ok = exact.max_residual < 1e-12 and fd.max_residual < 1e-6 and abs(exact.k_pi) < 1e-12 and abs(exact.kprime_pi) < 1e-12
    assert record(9, ok, f"residual {exact.max_residual:.2e} (analytic), {fd.max_residual:.2e} (fd); k(pi)={exact.k_pi:.1e}, k'(pi)={exact.kprime_pi:.1e}")


def test_criterion_10_hypothesis_diagnostics(record):
    sines = random_phase_sinusoids(1000, 4096, seed=0)
    scheme = SequenceScheme((1, 4, 16, 64))
    means = [p.mean for p in dataset_curve(sines, scheme)]  # m = 64, 256, 1024, 4096
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    hot_exact = all(hyp_statistic(v) == v.size**0.25 for v in one_hot_vectors(100, 4096, seed=0))
    inputs = [v for x in sines[:200] for v in subsample_sequence(x, scheme)] + list(one_hot_vectors(50, 256, seed=1))
    quartic_err = max(abs(hyp_statistic_quartic(v) - hyp_statistic(v) ** 4) / hyp_statistic_quartic(v) for v in inputs)
    ok = decreasing and hot_exact and quartic_err <= 1e-12
    curve = ", ".join(f"{m:.4f}" for m in means)
    assert record(10, ok, f"sinusoid curve (m=64..4096) {curve}; one-hot exact={hot_exact}; quartic rel err {quartic_err:.1e}")


def test_criterion_11_property_suite(record):
    parts, ok = [], True
    # sampler second moments, 10^6 draws each
    for spec in (Gaussian(0.7), MultivariateT(5.0), GeneralizedGaussian(1.0, 4.0), Uniform(1.0), Laplace(1.0)):
        x = sample_matrix(spec, 1000, 1000, 17)
        units = (x * x).mean(axis=1) if spec.family == "t" else (x * x).ravel()
        z = (units.mean() - second_moment(spec)) / (units.std(ddof=1) / math.sqrt(units.size))
        ok &= abs(z) <= 4
        parts.append(f"{spec.family} z={z:+.2f}")
    # stderr under 4x width
    pair = make_angle_pair(200, 1.0, seed=1)
    se = [np.mean([empirical_kernel(NetworkConfig(200, n, seed=s), pair).stderr for s in range(4)]) for n in (20_000, 80_000)]
    ratio = se[0] / se[1]
    ok &= abs(ratio / 2.0 - 1.0) <= 0.2
    # worker-count reproducibility
    cfg = NetworkConfig(64, 9000, depth=2, dist=Gaussian(0.015), seed=3)
    ok &= empirical_kernel(cfg, pair_64 := make_angle_pair(64, 0.7, seed=3), workers=1) == empirical_kernel(cfg, pair_64, workers=4)
    # four-term expansion of the LReLU kernel
    dec_err = 0.0
    for a in np.linspace(0.0, 0.95, 20):
        for theta in np.linspace(0.0, math.pi, 50):
            q = KernelQuery(float(theta), 1.3, 0.8, 1.7)
            half_lin = q.scale * math.cos(theta) / 2
            total = a * a * 2 * half_lin + 2 * a * (1 - a) * half_lin + (1 - a) ** 2 * arc_cosine_kernel(q)
            dec_err = max(dec_err, abs(lrelu_kernel(q, float(a)) - total))
    ok &= dec_err <= 1e-14
    parts.append(f"stderr ratio {ratio:.3f} (2 +- 20%); workers bit-identical; k1..k4 error {dec_err:.1e}")
    assert record(11, ok, "; ".join(parts))
