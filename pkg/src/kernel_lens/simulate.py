"""Finite random networks as Monte Carlo estimators of the equivalent kernel.

Weights of layer ``l`` are drawn in blocks of ``CHUNK_ROWS`` rows, block ``c``
from the stream keyed by ``(seed, l, c)``. Blocks are reassembled in order, so
every estimate is bit-identical for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .analytic import Activation, KernelQuery, _check_angle, init_stddev, kernel, normalized_kernel
from .distributions import DistributionSpec, Gaussian, calibrate, row_chunks, sample_chunk
from .rng import CELLS, INPUTS, PAIRS, derive_seed, substream, worker_count

INIT_RULES = ("eq8", "he")


class DegenerateResultError(ArithmeticError):
    """A hidden representation vanished, so an angle is undefined."""


@dataclass(frozen=True)
class NetworkConfig:
    m: int
    n: int
    depth: int = 1
    activation: Activation = Activation()
    dist: DistributionSpec = Gaussian()
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.depth < 1:
            raise ValueError(f"m, n and depth must be positive, got m={self.m}, n={self.n}, depth={self.depth}")

    def with_init(self, rule: str) -> NetworkConfig:
        """Recalibrate ``dist`` to the norm-preserving variance or to He's 2/n."""
        if rule == "eq8":
            w2 = init_stddev(self.activation.leak, self.n) ** 2
        elif rule == "he":
            w2 = 2.0 / self.n
        else:
            raise ValueError(f"init rule must be one of {INIT_RULES}, got {rule!r}")
        return replace(self, dist=calibrate(self.dist, w2))


@dataclass(frozen=True)
class InputPair:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    theta0: float
    norm_x: float
    norm_y: float

    @property
    def m(self) -> int:
        return self.x.shape[0]

    def stacked(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


@dataclass(frozen=True)
class EmpiricalKernel:
    mean: float
    stderr: float
    samples: int

    def z_score(self, reference: float, reference_stderr: float = 0.0) -> float:
        return _z(self.mean - reference, math.hypot(self.stderr, reference_stderr))


@dataclass(frozen=True)
class NormalizedEstimate:
    """Cosine similarity of two hidden representations with a delta-method stderr."""

    value: float
    stderr: float
    samples: int


def _z(diff: float, se: float) -> float:
    if se > 0.0:
        return diff / se
    return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)


def angle_between(x: np.ndarray, y: np.ndarray) -> float:
    """Angle between two vectors, accurate near 0 and pi."""
    ux = x / np.linalg.norm(x)
    uy = y / np.linalg.norm(y)
    return 2.0 * math.atan2(np.linalg.norm(ux - uy), np.linalg.norm(ux + uy))


def make_angle_pair(m: int, theta0: float, norm_x: float = 1.0, norm_y: float = 1.0, seed: int = 0) -> InputPair:
    """Two inputs at angle ``theta0`` spanning a uniformly random plane of R^m.

    Gram-Schmidt on two Gaussian vectors gives the first two rows of a
    Haar-random rotation, the same law as taking R from a QR decomposition.
    """
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    theta0 = float(_check_angle(theta0))
    if not (norm_x > 0.0 and norm_y > 0.0):
        raise ValueError("input norms must be positive")
    c = math.cos(theta0)
    s = 0.0 if theta0 == math.pi else math.sin(theta0)
    for attempt in range(16):
        g = substream(seed, PAIRS, attempt).standard_normal((2, m))
        r1 = g[0] / np.linalg.norm(g[0])
        v = g[1] - (g[1] @ r1) * r1
        v -= (v @ r1) * r1
        v_norm = np.linalg.norm(v)
        if v_norm <= 1e-8 * np.linalg.norm(g[1]):
            continue
        r2 = v / v_norm
        return InputPair(x=norm_x * r1, y=norm_y * (c * r1 + s * r2), theta0=theta0, norm_x=norm_x, norm_y=norm_y)
    raise DegenerateResultError("could not draw two independent directions")


def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def forward_layer(h: np.ndarray, cfg: NetworkConfig, layer: int, rows: int, workers: int = 1) -> np.ndarray:
    """Apply layer ``layer`` (rows neurons) to the columns of ``h``."""
    d = h.shape[0]

    def block(item):
        c, r = item
        w = sample_chunk(cfg.dist, r, d, cfg.seed, c, stream=(layer,))
        return cfg.activation(w @ h)

    return np.vstack(_map_ordered(block, list(row_chunks(rows)), workers))


def forward_layers(cfg: NetworkConfig, inputs: np.ndarray, workers: int | None = None) -> Iterator[np.ndarray]:
    """Yield the hidden representation (n x k) after each layer for inputs given as an m x k array."""
    if inputs.shape[0] != cfg.m:
        raise ValueError(f"inputs have dimension {inputs.shape[0]}, network expects m={cfg.m}")
    workers = worker_count(workers)
    h = inputs
    for layer in range(cfg.depth):
        h = forward_layer(h, cfg, layer, cfg.n, workers)
        yield h


def _final_hidden(cfg: NetworkConfig, pair: InputPair, workers: int | None) -> np.ndarray:
    if pair.m != cfg.m:
        raise ValueError(f"input pair has dimension {pair.m}, network expects m={cfg.m}")
    h = None
    for h in forward_layers(cfg, pair.stacked(), workers):
        pass
    return h


def _kernel_estimate(hx: np.ndarray, hy: np.ndarray) -> EmpiricalKernel:
    prod = hx * hy
    n = prod.shape[0]
    se = float(np.std(prod, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return EmpiricalKernel(mean=float(np.mean(prod)), stderr=se, samples=n)


def _normalized_estimate(hx: np.ndarray, hy: np.ndarray) -> NormalizedEstimate:
    n = hx.shape[0]
    a, b, c = hx * hy, hx * hx, hy * hy
    ma, mb, mc = a.mean(), b.mean(), c.mean()
    if mb == 0.0 or mc == 0.0:
        raise DegenerateResultError("a hidden representation is identically zero")
    r = ma / math.sqrt(mb * mc)
    grad = np.array([1.0 / math.sqrt(mb * mc), -0.5 * r / mb, -0.5 * r / mc])
    cov = np.cov(np.vstack([a, b, c])) / n if n > 1 else np.full((3, 3), np.inf)
    var = float(grad @ cov @ grad)
    return NormalizedEstimate(value=float(np.clip(r, -1.0, 1.0)), stderr=math.sqrt(max(var, 0.0)), samples=n)


def cosine(hx: np.ndarray, hy: np.ndarray) -> float:
    nx, ny = np.linalg.norm(hx), np.linalg.norm(hy)
    if nx == 0.0 or ny == 0.0:
        raise DegenerateResultError("a hidden representation is identically zero")
    if np.array_equal(hx, hy):
        return 1.0
    return float(np.clip(hx @ hy / (nx * ny), -1.0, 1.0))


def empirical_kernel(cfg: NetworkConfig, pair: InputPair, workers: int | None = None) -> EmpiricalKernel:
    """Mean and stderr of sigma(w_i.x) sigma(w_i.y) over the n neurons of the last layer."""
    h = _final_hidden(cfg, pair, workers)
    return _kernel_estimate(h[:, 0], h[:, 1])


def normalized_estimate(cfg: NetworkConfig, pair: InputPair, workers: int | None = None) -> NormalizedEstimate:
    h = _final_hidden(cfg, pair, workers)
    return _normalized_estimate(h[:, 0], h[:, 1])


def empirical_normalized_angle(cfg: NetworkConfig, pair: InputPair, workers: int | None = None) -> float:
    """Cosine similarity h(x).h(y) / (|h(x)| |h(y)|) after the last layer."""
    h = _final_hidden(cfg, pair, workers)
    return cosine(h[:, 0], h[:, 1])


def depth_propagation(cfg: NetworkConfig, pair: InputPair, workers: int | None = None) -> np.ndarray:
    """Cosine similarity after each of the ``cfg.depth`` layers."""
    if pair.m != cfg.m:
        raise ValueError(f"input pair has dimension {pair.m}, network expects m={cfg.m}")
    return np.array([cosine(h[:, 0], h[:, 1]) for h in forward_layers(cfg, pair.stacked(), workers)])


def gaussian_inputs(m: int, count: int, seed: int) -> np.ndarray:
    """``count`` standard-normal inputs as the columns of an m x count array."""
    return substream(seed, INPUTS).standard_normal((count, m)).T


def norm_ratio_trace(
    cfg: NetworkConfig, count: int, init: str | None = "eq8", networks: int = 1, workers: int | None = None
) -> np.ndarray:
    """||h^(j)(x)|| / ||x|| after every layer j, as a depth x count array.

    ``count`` Gaussian inputs are split as evenly as possible over
    ``networks`` independently drawn networks. A single network's mean ratio
    carries a network-wide gain fluctuation that does not average out over
    inputs; spreading inputs over networks does average it out.
    """
    if count < 1 or networks < 1 or networks > count:
        raise ValueError(f"need 1 <= networks <= count, got networks={networks}, count={count}")
    if init is not None:
        cfg = cfg.with_init(init)
    x = gaussian_inputs(cfg.m, count, cfg.seed)
    x_norm = np.linalg.norm(x, axis=0)
    out = np.empty((cfg.depth, count))
    for k, cols in enumerate(np.array_split(np.arange(count), networks)):
        net = replace(cfg, seed=derive_seed(cfg.seed, CELLS, k))
        for j, h in enumerate(forward_layers(net, x[:, cols], workers)):
            out[j, cols] = np.linalg.norm(h, axis=0) / x_norm[cols]
    return out


def norm_ratio_samples(
    cfg: NetworkConfig, count: int, init: str | None = "eq8", networks: int = 1, workers: int | None = None
) -> np.ndarray:
    """||h^(J)(x)|| / ||x|| at the last layer for ``count`` Gaussian inputs."""
    return norm_ratio_trace(cfg, count, init, networks, workers)[-1]


@dataclass(frozen=True)
class UniversalityPoint:
    m: int
    kernel: EmpiricalKernel
    normalized: NormalizedEstimate
    oracle_kernel: float
    oracle_kernel_stderr: float
    oracle_normalized: float
    oracle_normalized_stderr: float

    @property
    def gap(self) -> float:
        return abs(self.normalized.value - self.oracle_normalized)

    @property
    def stderr(self) -> float:
        return math.hypot(self.normalized.stderr, self.oracle_normalized_stderr)

    @property
    def kernel_z(self) -> float:
        return self.kernel.z_score(self.oracle_kernel, self.oracle_kernel_stderr)


@dataclass(frozen=True)
class GaussianOracle:
    kernel: EmpiricalKernel
    normalized: NormalizedEstimate


def gaussian_oracle(
    act: Activation, theta0: float, w2: float, n: int, seed: int, norm_x: float = 1.0, norm_y: float = 1.0,
    workers: int | None = None,
) -> GaussianOracle:
    """Kernel of spherical-Gaussian weights with E[W^2] = w2, by simulation.

    With Gaussian weights the kernel does not depend on the input dimension,
    so two inputs suffice.
    """
    theta0 = float(_check_angle(theta0))
    s = 0.0 if theta0 == math.pi else math.sin(theta0)
    x = np.array([norm_x, 0.0])
    y = norm_y * np.array([math.cos(theta0), s])
    pair = InputPair(x=x, y=y, theta0=theta0, norm_x=norm_x, norm_y=norm_y)
    cfg = NetworkConfig(m=2, n=n, depth=1, activation=act, dist=Gaussian(math.sqrt(w2)), seed=seed)
    h = _final_hidden(cfg, pair, workers)
    return GaussianOracle(_kernel_estimate(h[:, 0], h[:, 1]), _normalized_estimate(h[:, 0], h[:, 1]))


def check_universality_preconditions(dist: DistributionSpec) -> None:
    third = dist.abs_third_moment()
    if not math.isfinite(third):
        raise ValueError(f"{dist} has an infinite third absolute moment; universality needs E|W|^3 < inf")


def universality_sweep(
    dist: DistributionSpec,
    act: Activation,
    theta0: float,
    m_list: Sequence[int],
    n: int,
    seed: int = 0,
    norm_x: float = 1.0,
    norm_y: float = 1.0,
    oracle_n: int = 1_000_000,
    workers: int | None = None,
) -> list[UniversalityPoint]:
    """Distance between the simulated normalized kernel and the Gaussian-weight kernel at each m.

    (L)ReLU is compared with its closed form; other activations with a
    Gaussian-weight simulation of ``oracle_n`` neurons at matched E[W^2].
    """
    check_universality_preconditions(dist)
    if list(m_list) != sorted(set(m_list)) or min(m_list) < 2:
        raise ValueError(f"m_list must be strictly increasing integers >= 2, got {list(m_list)}")
    w2 = dist.second_moment()
    if act.has_closed_form:
        q = KernelQuery(theta0, norm_x, norm_y, w2)
        oracle_k, oracle_k_se = kernel(q, act), 0.0
        oracle_r, oracle_r_se = float(normalized_kernel(theta0, act.leak)), 0.0
    else:
        ref = gaussian_oracle(act, theta0, w2, oracle_n, derive_seed(seed, CELLS, 0), norm_x, norm_y, workers)
        oracle_k, oracle_k_se = ref.kernel.mean, ref.kernel.stderr
        oracle_r, oracle_r_se = ref.normalized.value, ref.normalized.stderr

    points = []
    for m in m_list:
        cell_seed = derive_seed(seed, CELLS, m)
        pair = make_angle_pair(m, theta0, norm_x, norm_y, seed=cell_seed)
        cfg = NetworkConfig(m=m, n=n, depth=1, activation=act, dist=dist, seed=cell_seed)
        h = _final_hidden(cfg, pair, workers)
        points.append(
            UniversalityPoint(
                m=m,
                kernel=_kernel_estimate(h[:, 0], h[:, 1]),
                normalized=_normalized_estimate(h[:, 0], h[:, 1]),
                oracle_kernel=oracle_k,
                oracle_kernel_stderr=oracle_k_se,
                oracle_normalized=oracle_r,
                oracle_normalized_stderr=oracle_r_se,
            )
        )
    return points
