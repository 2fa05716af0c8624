"""Equivalent kernels of wide random (L)ReLU networks and their Monte Carlo checks."""

from .analytic import (
    Activation,
    DepthTrace,
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
    signal_distance_ratio,
)
from .distributions import (
    DistributionSpec,
    Gaussian,
    GeneralizedGaussian,
    InfiniteMomentError,
    Laplace,
    MultivariateT,
    Uniform,
    abs_third_moment,
    calibrate,
    is_rotationally_invariant,
    sample_matrix,
    second_moment,
)
from .simulate import (
    DegenerateResultError,
    EmpiricalKernel,
    InputPair,
    NetworkConfig,
    depth_propagation,
    empirical_kernel,
    empirical_normalized_angle,
    make_angle_pair,
    norm_ratio_samples,
    universality_sweep,
)

__version__ = "0.1.0"
