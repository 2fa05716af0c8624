import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kernel_lens.analytic import (
    Activation,
    DomainError,
    KernelQuery,
    angle_map_derivative,
    arc_cosine_kernel,
    contraction_derivative_magnitude,
    depth_trace,
    init_stddev,
    lrelu_angle_map,
    lrelu_kernel,
    normalized_kernel,
    normalized_relu_kernel,
    ode_forcing_residual,
    relu_kernel_derivatives,
    signal_distance_ratio,
)

angles = st.floats(0.0, math.pi)
positive = st.floats(1e-3, 1e3)
slopes = st.floats(0.0, 0.99)
cosines = st.floats(-1.0, 1.0)


def gaussian_kernel_by_quadrature(theta, a):
    """E[s(u) s(v)] for standard normals with correlation cos(theta), by 2-d quadrature."""
    c, s = math.cos(theta), math.sin(theta)

    def act(z):
        return z if z > 0 else a * z

    def f(g2, g1):
        dens = math.exp(-0.5 * (g1 * g1 + g2 * g2)) / (2 * math.pi)
        return act(g1) * act(c * g1 + s * g2) * dens

    val, _ = integrate.dblquad(f, -9, 9, -9, 9, epsabs=1e-10)
    return val


# closed forms


def test_relu_kernel_values():
    assert arc_cosine_kernel(KernelQuery(0.0)) == pytest.approx(0.5, abs=1e-15)
    assert arc_cosine_kernel(KernelQuery(math.pi, 3.0, 2.0, 5.0)) == 0.0
    assert arc_cosine_kernel(KernelQuery(math.pi / 2)) == pytest.approx(1 / (2 * math.pi), rel=1e-14)


def test_lrelu_kernel_values():
    assert lrelu_kernel(KernelQuery(0.0), 0.2) == pytest.approx(0.52, rel=1e-14)
    assert lrelu_kernel(KernelQuery(math.pi / 2), 0.2) == pytest.approx(0.101859, abs=1e-6)
    assert lrelu_kernel(KernelQuery(math.pi / 2), Activation.lrelu(0.2)) == pytest.approx(0.64 / (2 * math.pi), rel=1e-14)


@pytest.mark.parametrize("a", [0.0, 0.2, 0.5])
@pytest.mark.parametrize("theta", [0.3, math.pi / 2, 2.5])
def test_lrelu_kernel_matches_gaussian_quadrature(theta, a):
    assert lrelu_kernel(KernelQuery(theta), a) == pytest.approx(gaussian_kernel_by_quadrature(theta, a), abs=1e-8)


def test_normalized_relu_values():
    assert normalized_relu_kernel(0.0) == 1.0
    assert normalized_relu_kernel(math.pi) == 0.0
    assert normalized_relu_kernel(math.pi / 2) == pytest.approx(0.318310, abs=1e-6)


def test_angle_map_values():
    for a in (0.0, 0.2, 0.7):
        assert lrelu_angle_map(1.0, a) == pytest.approx(1.0, abs=1e-15)
    assert lrelu_angle_map(0.0, 0.0) == pytest.approx(1 / math.pi, rel=1e-14)
    assert lrelu_angle_map(0.0, 0.2) == pytest.approx(0.64 / (1.04 * math.pi), rel=1e-14)


def test_normalized_lrelu_at_pi():
    a = 0.2
    assert normalized_kernel(math.pi, a) == pytest.approx(-2 * a / (1 + a * a), rel=1e-12)


def test_depth_trace_examples():
    tr = depth_trace(0.0, 0.2, 128)
    assert len(tr.angles) == 129 and np.all(tr.angles == 0.0)
    assert depth_trace(math.pi / 2, 0.0, 2).cosines[2] == pytest.approx(0.49373, abs=1e-5)
    assert depth_trace(math.pi / 2, 0.0, 128).angles[128] < 0.1


def test_depth_trace_is_read_only():
    tr = depth_trace(1.0, 0.0, 4)
    with pytest.raises(ValueError):
        tr.angles[0] = 0.0


def test_contraction_bound_values():
    assert contraction_derivative_magnitude(1.0, 0.3) == 1.0
    assert contraction_derivative_magnitude(-1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert contraction_derivative_magnitude(0.0, 0.2) == pytest.approx(7 / 9, rel=1e-14)


@pytest.mark.parametrize("a", [0.0, 0.2, 0.5, 0.9])
def test_exact_derivative_matches_finite_differences(a):
    z = np.linspace(-0.999, 0.999, 2001)
    h = 1e-6
    fd = (lrelu_angle_map(z + h, a) - lrelu_angle_map(z - h, a)) / (2 * h)
    assert np.max(np.abs(fd - angle_map_derivative(z, a))) < 1e-7


def test_bound_and_exact_derivative_agree_for_relu():
    z = np.linspace(-1, 1, 101)
    assert np.allclose(contraction_derivative_magnitude(z, 0.0), np.abs(angle_map_derivative(z, 0.0)), atol=1e-15)


def test_signal_distance_values():
    assert signal_distance_ratio(0.0) == 0.0
    assert signal_distance_ratio(math.pi / 2) == pytest.approx(2.0, abs=1e-15)
    assert signal_distance_ratio(math.pi) == 4.0


def test_init_stddev_values():
    assert init_stddev(0.0, 100) == pytest.approx(0.141421, abs=1e-6)
    assert init_stddev(0.2, 1000) == pytest.approx(0.043853, abs=1e-6)
    assert init_stddev(0.0, 2) == 1.0
    with pytest.raises(DomainError):
        init_stddev(0.0, 0)


def test_ode_residuals():
    q = KernelQuery(math.pi / 2)
    res = ode_forcing_residual(q, 64)
    assert res.max_residual < 1e-12
    assert abs(res.k_pi) < 1e-12 and abs(res.kprime_pi) < 1e-12
    assert ode_forcing_residual(q, 64, method="fd").max_residual < 1e-6
    k, _, d2k = relu_kernel_derivatives(math.pi / 2, q)
    assert k + d2k == pytest.approx(1 / math.pi, rel=1e-14)


def test_second_derivative_matches_finite_differences():
    q = KernelQuery(1.0, 1.3, 0.7, 2.0)
    theta = np.linspace(0.0, math.pi, 10_002)[1:-1]
    h = 1e-4
    k = lambda t: q.scale / (2 * math.pi) * (np.sin(t) + (math.pi - t) * np.cos(t))
    fd = (k(theta + h) - 2 * k(theta) + k(theta - h)) / (h * h)
    _, _, d2k = relu_kernel_derivatives(theta, q)
    assert np.max(np.abs(fd - d2k)) < 1e-6


def test_ode_rejects_small_grid():
    with pytest.raises(DomainError):
        ode_forcing_residual(KernelQuery(1.0), 8)


@pytest.mark.parametrize("bad", [-0.1, math.pi + 1e-6, math.nan])
def test_angle_domain(bad):
    with pytest.raises(DomainError):
        KernelQuery(bad)
    with pytest.raises(DomainError):
        normalized_relu_kernel(bad)


def test_angle_slack_is_clipped():
    assert KernelQuery(math.pi + 5e-10).theta0 == math.pi
    assert KernelQuery(-5e-10).theta0 == 0.0


def test_cosine_domain():
    with pytest.raises(DomainError):
        lrelu_angle_map(1.0 + 1e-9, 0.0)
    assert lrelu_angle_map(1.0 + 1e-13, 0.0) == pytest.approx(1.0)


def test_activation_validation():
    with pytest.raises(ValueError):
        Activation("lrelu", 1.0)
    with pytest.raises(ValueError):
        Activation("relu", 0.1)
    with pytest.raises(ValueError):
        Activation("softplus")


@pytest.mark.parametrize("act", [Activation.relu(), Activation.lrelu(0.3), Activation.elu(), Activation.tanh()])
def test_activation_vanishes_at_zero(act):
    assert act(0.0) == 0.0


@given(st.floats(-1e3, 1e3), slopes)
def test_lrelu_pointwise_form(z, a):
    step = 1.0 if z > 0 else 0.0
    assert Activation.lrelu(a)(z) == pytest.approx((a + (1 - a) * step) * z, abs=1e-12)


# properties


@given(angles, positive, positive, positive)
def test_lrelu_at_zero_slope_is_relu(theta, nx, ny, w2):
    q = KernelQuery(theta, nx, ny, w2)
    assert abs(lrelu_kernel(q, 0.0) - arc_cosine_kernel(q)) <= 1e-14 * max(1.0, q.scale)


@given(positive, positive, positive, slopes)
def test_self_kernels(nx, ny, w2, a):
    q = KernelQuery(0.0, nx, ny, w2)
    assert arc_cosine_kernel(q) == pytest.approx(w2 * nx * ny / 2, rel=1e-14)
    assert lrelu_kernel(q, a) == pytest.approx((1 + a * a) / 2 * w2 * nx * ny, rel=1e-12)


@given(angles, slopes)
def test_lrelu_kernel_decomposition(theta, a):
    # s(u) = a u + (1-a) relu(u); expand E[s(w.x) s(w.y)] into four terms
    q = KernelQuery(theta, 1.7, 0.6, 2.3)
    half_lin = q.scale * math.cos(theta) / 2  # E[(w.x) relu(w.y)]
    k1 = a * a * 2 * half_lin  # E[(w.x)(w.y)]
    k2 = a * (1 - a) * half_lin
    k3 = a * (1 - a) * half_lin
    k4 = (1 - a) ** 2 * arc_cosine_kernel(q)
    assert abs(lrelu_kernel(q, a) - (k1 + k2 + k3 + k4)) <= 1e-14 * max(1.0, q.scale)


@given(angles, st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
def test_kernel_bilinear_scaling(theta, nx, ny, w2, c):
    q = KernelQuery(theta, nx, ny, w2)
    base = arc_cosine_kernel(q)
    tol = 1e-12 * max(1.0, base * c)
    assert abs(arc_cosine_kernel(KernelQuery(theta, c * nx, ny, w2)) - c * base) <= tol
    assert abs(arc_cosine_kernel(KernelQuery(theta, nx, c * ny, w2)) - c * base) <= tol
    assert abs(arc_cosine_kernel(KernelQuery(theta, nx, ny, c * w2)) - c * base) <= tol


@given(angles, angles)
def test_normalized_relu_strictly_decreasing(t1, t2):
    lo, hi = sorted((t1, t2))
    if hi - lo > 1e-6:
        assert normalized_relu_kernel(lo) > normalized_relu_kernel(hi)


@given(angles)
def test_normalized_relu_range(theta):
    assert 0.0 <= normalized_relu_kernel(theta) <= 1.0


@given(cosines, slopes)
def test_angle_map_range(z, a):
    assert -1.0 <= lrelu_angle_map(z, a) <= 1.0


@given(cosines, slopes)
def test_contraction(z, a):
    assert contraction_derivative_magnitude(z, a) <= 1.0
    assert abs(angle_map_derivative(z, a)) <= 1.0
    if z < 1.0 - 1e-9:
        assert contraction_derivative_magnitude(z, a) < 1.0
        assert angle_map_derivative(z, a) < 1.0


@settings(max_examples=50)
@given(st.floats(1e-3, math.pi - 1e-3), st.sampled_from([0.0, 0.2, 0.5]))
def test_depth_trace_invariants(theta0, a):
    tr = depth_trace(theta0, a, 64)
    assert np.all((tr.angles >= 0) & (tr.angles <= math.pi))
    assert np.allclose(np.cos(tr.angles), tr.cosines, atol=1e-12)
    d = np.diff(tr.angles[1:])
    active = tr.angles[1:-1] > 1e-12
    assert np.all(d[active] < 0)
    assert tr.angles[-1] < tr.angles[1]


@given(st.floats(0.0, math.pi))
def test_signal_distance_non_increasing_along_trace(theta0):
    dist = depth_trace(theta0, 0.0, 32).signal_distances()
    assert np.all(np.diff(dist[1:]) <= 1e-12)
