"""Closed-form equivalent kernels of infinitely wide (L)ReLU layers.

Everything here is a pure function of its arguments. Angles are in radians,
``w2`` is the per-coordinate second moment E[W_i^2] of the weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ANGLE_SLACK = 1e-9
COSINE_SLACK = 1e-12

ACTIVATION_KINDS = ("relu", "lrelu", "elu", "tanh_reference")


class DomainError(ValueError):
    """An argument lies outside the domain of a kernel formula."""


@dataclass(frozen=True)
class Activation:
    """Pointwise activation of every hidden neuron.

    ``relu`` is the ``lrelu`` family at slope 0. ``elu`` (unit alpha) and
    ``tanh_reference`` have no closed-form kernel and are only simulated.
    """

    kind: str = "relu"
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.kind!r}; expected one of {ACTIVATION_KINDS}")
        if not 0.0 <= self.slope < 1.0:
            raise ValueError(f"slope must lie in [0, 1), got {self.slope}")
        if self.kind != "lrelu" and self.slope != 0.0:
            raise ValueError(f"slope is only meaningful for lrelu, got slope={self.slope} for {self.kind}")

    @classmethod
    def relu(cls) -> Activation:
        return cls("relu")

    @classmethod
    def lrelu(cls, a: float) -> Activation:
        return cls("lrelu", float(a))

    @classmethod
    def elu(cls) -> Activation:
        return cls("elu")

    @classmethod
    def tanh(cls) -> Activation:
        return cls("tanh_reference")

    @property
    def leak(self) -> float:
        """Negative-side slope ``a``; 0 for everything except lrelu."""
        return self.slope if self.kind == "lrelu" else 0.0

    @property
    def has_closed_form(self) -> bool:
        return self.kind in ("relu", "lrelu")

    @property
    def positively_homogeneous(self) -> bool:
        return self.has_closed_form

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "lrelu":
            return np.where(z > 0.0, z, self.slope * z)
        if self.kind == "elu":
            return np.where(z > 0.0, z, np.expm1(np.minimum(z, 0.0)))
        return np.tanh(z)

    def label(self) -> str:
        return f"lrelu(a={self.slope:g})" if self.kind == "lrelu" else self.kind


def _check_angle(theta0):
    theta = np.asarray(theta0, dtype=float)
    if np.any(~np.isfinite(theta)) or np.any(theta < -ANGLE_SLACK) or np.any(theta > math.pi + ANGLE_SLACK):
        raise DomainError(f"angle must lie in [0, pi], got {theta0}")
    return np.clip(theta, 0.0, math.pi)


def _check_cosine(z):
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(np.abs(z) > 1.0 + COSINE_SLACK):
        raise DomainError(f"cosine must lie in [-1, 1], got {z}")
    return np.clip(z, -1.0, 1.0)


def _check_slope(a: float) -> float:
    if not 0.0 <= a < 1.0:
        raise DomainError(f"LReLU slope must lie in [0, 1), got {a}")
    return float(a)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class KernelQuery:
    """Angle between two inputs, their norms, and the weight second moment."""

    theta0: float
    norm_x: float = 1.0
    norm_y: float = 1.0
    w2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta0", float(_check_angle(self.theta0)))
        for name in ("norm_x", "norm_y", "w2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be a positive finite real, got {value}")

    @property
    def scale(self) -> float:
        return self.w2 * self.norm_x * self.norm_y


def _sin(theta):
    # exact zero at pi, so the ReLU kernel of opposite inputs is exactly 0
    return np.where(theta == math.pi, 0.0, np.sin(theta))


def _relu_bracket(theta):
    # sin t + (pi - t) cos t, the angular factor shared by every ReLU formula
    return _sin(theta) + (math.pi - theta) * np.cos(theta)


def arc_cosine_kernel(q: KernelQuery) -> float:
    """Equivalent kernel of a ReLU layer with rotationally-invariant weights."""
    theta = q.theta0
    value = q.scale / (2.0 * math.pi) * float(_relu_bracket(theta))
    return max(value, 0.0)


def lrelu_kernel(q: KernelQuery, act: Activation | float = 0.0) -> float:
    """Equivalent kernel of an LReLU layer; ``act`` may be an Activation or the slope."""
    if isinstance(act, Activation):
        if not act.has_closed_form:
            raise DomainError(f"no closed-form kernel for {act.kind}")
        a = act.leak
    else:
        a = _check_slope(act)
    theta = q.theta0
    bracket = (1.0 - a) ** 2 / (2.0 * math.pi) * float(_relu_bracket(theta)) + a * math.cos(theta)
    return bracket * q.scale


def kernel(q: KernelQuery, act: Activation) -> float:
    if act.kind == "relu":
        return arc_cosine_kernel(q)
    return lrelu_kernel(q, act)


def normalized_relu_kernel(theta0):
    """Cosine similarity of ReLU hidden representations; accepts arrays."""
    theta = _check_angle(theta0)
    return _scalar_or_array(np.clip(_relu_bracket(theta) / math.pi, 0.0, 1.0))


def normalized_kernel(theta0, a: float = 0.0):
    """Normalized LReLU kernel as a function of the input angle."""
    theta = _check_angle(theta0)
    return lrelu_angle_map(np.cos(theta), a)


def lrelu_angle_map(cos_prev, a: float = 0.0):
    """Layer-to-layer cosine map ``T`` of a deep LReLU network.

    Uses the previous layer's cosine in the linear term (not the input
    cosine), which is the map shown to be a contraction.
    """
    a = _check_slope(a)
    z = _check_cosine(cos_prev)
    relu_part = np.sqrt(1.0 - z * z) + (math.pi - np.arccos(z)) * z
    out = ((1.0 - a) ** 2 / math.pi * relu_part + 2.0 * a * z) / (1.0 + a * a)
    return _scalar_or_array(np.clip(out, -1.0, 1.0))


def contraction_derivative_magnitude(z, a: float = 0.0):
    """Contraction bound |1 - ((1-a)/(1+a))^2 * arccos(z)/pi| for the layer map.

    This is the bound in its customary form. The exact derivative of
    ``lrelu_angle_map`` has (1-a)^2/(1+a^2) in place of ((1-a)/(1+a))^2 (see
    ``angle_map_derivative``); the two agree at a = 0 and both are <= 1.
    """
    a = _check_slope(a)
    z = _check_cosine(z)
    out = np.abs(1.0 - ((1.0 - a) / (1.0 + a)) ** 2 * np.arccos(z) / math.pi)
    return _scalar_or_array(out)


def angle_map_derivative(z, a: float = 0.0):
    """Exact T'(z) = 1 - (1-a)^2/(1+a^2) * arccos(z)/pi, which lies in [2a/(1+a^2), 1]."""
    a = _check_slope(a)
    z = _check_cosine(z)
    return _scalar_or_array(1.0 - (1.0 - a) ** 2 / (1.0 + a * a) * np.arccos(z) / math.pi)


@dataclass(frozen=True)
class DepthTrace:
    slope: float
    angles: np.ndarray = field(repr=False)
    cosines: np.ndarray = field(repr=False)

    @property
    def depth(self) -> int:
        return len(self.angles) - 1

    def signal_distances(self) -> np.ndarray:
        return 2.0 - 2.0 * self.cosines


def depth_trace(theta0: float, a: float, depth: int) -> DepthTrace:
    """Iterate the cosine map ``depth`` times; always returns depth + 1 entries."""
    if int(depth) != depth or depth < 1:
        raise DomainError(f"depth must be a positive integer, got {depth}")
    a = _check_slope(a)
    theta0 = float(_check_angle(theta0))
    cosines = np.empty(depth + 1)
    cosines[0] = math.cos(theta0)
    for j in range(1, depth + 1):
        cosines[j] = lrelu_angle_map(cosines[j - 1], a)
    angles = np.arccos(cosines)
    angles[0] = theta0
    angles.setflags(write=False)
    cosines.setflags(write=False)
    return DepthTrace(slope=a, angles=angles, cosines=cosines)


def signal_distance_ratio(theta_j):
    """Expected squared distance of equal-norm signals over their squared norm."""
    theta = _check_angle(theta_j)
    return _scalar_or_array(2.0 - 2.0 * np.cos(theta))


def init_stddev(a: float, n: int) -> float:
    """Weight standard deviation that keeps ||h(x)|| close to ||x|| for an LReLU layer of width n."""
    a = _check_slope(a)
    if int(n) != n or n < 1:
        raise DomainError(f"width must be a positive integer, got {n}")
    return math.sqrt(2.0 / ((1.0 + a * a) * n))


def he_stddev(n: int) -> float:
    return init_stddev(0.0, n)


def relu_kernel_derivatives(theta, q: KernelQuery):
    """Return (k, k', k'') of the ReLU kernel in the angle, evaluated at ``theta``."""
    theta = _check_angle(theta)
    c = q.scale / (2.0 * math.pi)
    s, co = _sin(theta), np.cos(theta)
    k = c * (s + (math.pi - theta) * co)
    dk = -c * (math.pi - theta) * s
    d2k = c * (s - (math.pi - theta) * co)
    return k, dk, d2k


def _relu_kernel_at(theta, q: KernelQuery):
    return q.scale / (2.0 * math.pi) * _relu_bracket(theta)


@dataclass(frozen=True)
class OdeResidual:
    max_residual: float
    k_pi: float
    kprime_pi: float
    forcing_constant: float
    method: str
    grid_size: int


def ode_forcing_residual(
    q: KernelQuery, grid_size: int = 64, method: str = "analytic", fd_points: int = 10_000
) -> OdeResidual:
    """Check that the ReLU kernel solves k'' + k = K sin(theta), k(pi) = k'(pi) = 0.

    ``q.theta0`` is ignored; the residual is taken over a uniform interior grid of
    (0, pi). ``method="fd"`` replaces the analytic k'' with a central second
    difference of step pi / fd_points.
    """
    if grid_size < 16:
        raise DomainError(f"grid_size must be at least 16, got {grid_size}")
    forcing = q.scale / math.pi
    theta = np.linspace(0.0, math.pi, grid_size + 2)[1:-1]
    k, _, d2k = relu_kernel_derivatives(theta, q)
    if method == "fd":
        h = math.pi / fd_points
        d2k = (_relu_kernel_at(theta + h, q) - 2.0 * k + _relu_kernel_at(theta - h, q)) / (h * h)
    elif method != "analytic":
        raise ValueError(f"method must be 'analytic' or 'fd', got {method!r}")
    residual = d2k + k - forcing * _sin(theta)
    k_pi, kprime_pi, _ = relu_kernel_derivatives(math.pi, q)
    return OdeResidual(
        max_residual=float(np.max(np.abs(residual))),
        k_pi=float(k_pi),
        kprime_pi=float(kprime_pi) + 0.0,  # no negative zero
        forcing_constant=forcing,
        method=method,
        grid_size=grid_size,
    )
