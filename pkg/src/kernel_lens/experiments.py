"""Grid-level experiments: each returns a ``Table`` of plot-ready rows plus tolerance checks.

Cells of a grid (one angle, one repeat) are independent: every cell derives
its own seeds from ``(seed, cell indices)`` and results are assembled in grid
order, so the output never depends on how many workers ran it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import analytic
from .analytic import Activation, KernelQuery
from .distributions import DistributionSpec, Gaussian
from .rng import CELLS, derive_seed, worker_count
from .simulate import (
    NetworkConfig,
    _kernel_estimate,
    _z,
    _map_ordered,
    cosine,
    depth_propagation,
    forward_layers,
    gaussian_oracle,
    make_angle_pair,
    norm_ratio_trace,
    universality_sweep,
)

Z_TOL = 4.0
DEPTH_TOL = 0.05


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


def theta_grid(points: int) -> np.ndarray:
    if points < 1:
        raise ValueError("grid needs at least one point")
    return np.linspace(0.0, math.pi, points) if points > 1 else np.array([math.pi / 2])


def _cell_workers(cells: int, workers: int | None) -> tuple[int, int]:
    # parallelize across cells first; inner chunk-parallelism only when there is one cell
    total = worker_count(workers)
    return (total, 1) if cells > 1 else (1, total)


def kernel_curve(act: Activation, w2: float = 1.0, grid: int = 181, norm_x: float = 1.0, norm_y: float = 1.0) -> Table:
    if not act.has_closed_form:
        raise ValueError(f"no closed-form kernel for {act.kind}")
    table = Table(columns=("theta0", "k", "normalized_k"))
    for theta in theta_grid(grid):
        q = KernelQuery(theta, norm_x, norm_y, w2)
        table.rows.append((float(theta), analytic.kernel(q, act), float(analytic.normalized_kernel(theta, act.leak))))
    return table


def mc_verify(
    dist: DistributionSpec,
    act: Activation,
    m: int = 1000,
    n: int = 1000,
    grid: int = 16,
    seed: int = 0,
    repeats: int = 1,
    oracle: str = "closed-form",
    oracle_n: int = 1_000_000,
    z_tol: float = Z_TOL,
    workers: int | None = None,
) -> Table:
    """Simulated single-layer kernel against its oracle at each angle of a uniform grid.

    ``normalized_mc`` averages the cosine similarity of the ``repeats``
    independent networks at each angle.
    """
    if oracle not in ("closed-form", "mc-gaussian"):
        raise ValueError(f"unknown oracle {oracle!r}")
    if oracle == "closed-form" and not act.has_closed_form:
        raise ValueError(f"{act.kind} has no closed-form kernel; use the mc-gaussian oracle")
    w2 = dist.second_moment()
    thetas = theta_grid(grid)
    cells = [(i, r) for i in range(len(thetas)) for r in range(repeats)]
    outer, inner = _cell_workers(len(cells), workers)

    def run(cell):
        i, r = cell
        cell_seed = derive_seed(seed, CELLS, i, r)
        pair = make_angle_pair(m, thetas[i], seed=cell_seed)
        cfg = NetworkConfig(m=m, n=n, depth=1, activation=act, dist=dist, seed=cell_seed)
        h = next(forward_layers(cfg, pair.stacked(), inner))
        est = _kernel_estimate(h[:, 0], h[:, 1])
        return est.mean, est.stderr, cosine(h[:, 0], h[:, 1])

    results = _map_ordered(run, cells, outer)

    def reference(i):
        theta = float(thetas[i])
        if oracle == "closed-form":
            return (
                analytic.kernel(KernelQuery(theta, 1.0, 1.0, w2), act), 0.0,
                float(analytic.normalized_kernel(theta, act.leak)),
            )
        ref = gaussian_oracle(act, theta, w2, oracle_n, derive_seed(seed, CELLS, i, repeats), workers=inner)
        return ref.kernel.mean, ref.kernel.stderr, ref.normalized.value

    table = Table(columns=("theta0", "analytic", "mc_mean", "mc_stderr", "z_score", "normalized_analytic", "normalized_mc"))
    for i, theta in enumerate(thetas):
        block = results[i * repeats : (i + 1) * repeats]
        mean = float(np.mean([b[0] for b in block]))
        se = math.sqrt(sum(b[1] ** 2 for b in block)) / repeats
        cos_mc = float(np.mean([b[2] for b in block]))
        ref_k, ref_se, ref_cos = reference(i)
        diff, comb = mean - ref_k, math.hypot(se, ref_se)
        z = _z(diff, comb)
        table.rows.append((float(theta), ref_k, mean, se, z, ref_cos, cos_mc))
    max_z = float(np.max(np.abs(table.column("z_score"))))
    table.checks.append(Check("max_abs_z", max_z <= z_tol, f"max |z| = {max_z:.3f}, tolerance {z_tol}"))
    return table


def normalized_relu_check(
    m: int = 1000, n: int = 1000, grid: int = 16, seed: int = 0, repeats: int = 32, tol: float = 0.02,
    workers: int | None = None,
) -> Table:
    """Normalized ReLU kernel with Gaussian weights against the closed form."""
    table = mc_verify(Gaussian(1.0), Activation.relu(), m=m, n=n, grid=grid, seed=seed, repeats=repeats, workers=workers)
    err = np.abs(table.column("normalized_mc") - table.column("normalized_analytic"))
    table.checks.append(Check("normalized_abs_error", bool(np.all(err <= tol)), f"max error {err.max():.4f}, tolerance {tol}"))
    return table


def depth_curve(
    a: float = 0.0,
    depths: Sequence[int] = (1, 2, 4, 8, 16, 32, 64, 128),
    mode: str = "analytic",
    grid: int = 64,
    m: int = 1000,
    n: int = 1000,
    dist: DistributionSpec | None = None,
    seed: int = 0,
    repeats: int = 1,
    tol: float = DEPTH_TOL,
    workers: int | None = None,
) -> Table:
    """cos(theta_j) at the requested depths for a grid of input angles.

    MC mode runs one network of the largest requested depth per (angle,
    repeat); its first j layers form the depth-j network. Weights are
    calibrated to the norm-preserving variance.
    """
    depths = sorted(set(int(d) for d in depths))
    if depths[0] < 1:
        raise ValueError("depths must be positive")
    thetas = theta_grid(grid)
    deepest = depths[-1]
    analytic_cos = {i: analytic.depth_trace(float(t), a, deepest).cosines for i, t in enumerate(thetas)}
    if mode == "analytic":
        table = Table(columns=("theta0", "j", "cos_theta_j"))
        for i, theta in enumerate(thetas):
            for j in depths:
                table.rows.append((float(theta), j, float(analytic_cos[i][j])))
        return table
    if mode != "mc":
        raise ValueError(f"mode must be 'analytic' or 'mc', got {mode!r}")

    act = Activation.lrelu(a) if a > 0 else Activation.relu()
    base = NetworkConfig(m=m, n=n, depth=deepest, activation=act, dist=dist or Gaussian(1.0)).with_init("eq8")
    cells = [(i, r) for i in range(len(thetas)) for r in range(repeats)]
    outer, inner = _cell_workers(len(cells), workers)

    def run(cell):
        i, r = cell
        cell_seed = derive_seed(seed, CELLS, i, r)
        pair = make_angle_pair(m, thetas[i], seed=cell_seed)
        cfg = NetworkConfig(m=m, n=n, depth=deepest, activation=act, dist=base.dist, seed=cell_seed)
        return depth_propagation(cfg, pair, inner)

    results = _map_ordered(run, cells, outer)
    table = Table(columns=("theta0", "j", "cos_theta_j", "analytic", "abs_error"))
    for i, theta in enumerate(thetas):
        mean_cos = np.mean(results[i * repeats : (i + 1) * repeats], axis=0)
        for j in depths:
            ref = float(analytic_cos[i][j])
            table.rows.append((float(theta), j, float(mean_cos[j - 1]), ref, abs(float(mean_cos[j - 1]) - ref)))
    worst = float(table.column("abs_error").max())
    table.checks.append(Check("depth_abs_error", worst <= tol, f"max |mc - analytic| = {worst:.4f}, tolerance {tol}"))
    return table


def predicted_norm_ratio(a: float, init: str, depth: int) -> float:
    """Large-width norm ratio after ``depth`` layers: 1 under eq8, (1+a^2)^(depth/2) under He."""
    return 1.0 if init == "eq8" else (1.0 + a * a) ** (depth / 2.0)


def norm_hist(
    a: float = 0.2,
    init: str = "eq8",
    depths: Sequence[int] = (1, 2, 4, 8, 16, 32),
    count: int = 1000,
    bins: int = 40,
    m: int = 1000,
    n: int = 1000,
    dist: DistributionSpec | None = None,
    seed: int = 0,
    networks: int = 50,
    tol: float = 0.1,
    workers: int | None = None,
) -> Table:
    """Histograms of ||h^(j)(x)|| / ||x|| for Gaussian inputs.

    Inputs are spread over ``networks`` independent networks of the largest
    requested depth. Check: the mean ratio lies within ``tol`` (relative) of
    the large-width prediction.
    """
    depths = sorted(set(int(d) for d in depths))
    if depths[0] < 1:
        raise ValueError("depths must be positive")
    act = Activation.lrelu(a) if a > 0 else Activation.relu()
    cfg = NetworkConfig(m=m, n=n, depth=depths[-1], activation=act, dist=dist or Gaussian(1.0), seed=seed)
    trace = norm_ratio_trace(cfg, count, init, networks, workers)
    ratios = {j: trace[j - 1] for j in depths}
    everything = np.concatenate(list(ratios.values()))
    edges = np.linspace(everything.min(), everything.max(), bins + 1)
    table = Table(columns=("depth", "bin_left", "bin_right", "count"))
    for j in depths:
        counts, _ = np.histogram(ratios[j], bins=edges)
        for b in range(bins):
            table.rows.append((j, float(edges[b]), float(edges[b + 1]), int(counts[b])))
        mean = float(ratios[j].mean())
        pred = predicted_norm_ratio(a, init, j)
        table.notes.append(f"depth={j} mean_ratio={mean:.6f} std_ratio={float(ratios[j].std()):.6f} predicted={pred:.6f}")
        table.checks.append(Check(f"mean_ratio_depth_{j}", abs(mean - pred) <= tol * pred, f"mean {mean:.4f}, predicted {pred:.4f}"))
    return table


def universality(
    dist: DistributionSpec,
    act: Activation,
    m_list: Sequence[int] = (16, 64, 256, 1024),
    n: int = 100_000,
    theta0: float = math.pi / 2,
    seed: int = 0,
    oracle_n: int = 1_000_000,
    gap_tol: float = 0.02,
    workers: int | None = None,
) -> Table:
    points = universality_sweep(dist, act, theta0, m_list, n, seed=seed, oracle_n=oracle_n, workers=workers)
    table = Table(columns=("m", "gap", "stderr", "normalized", "oracle_normalized", "kernel", "kernel_stderr", "oracle_kernel"))
    for p in points:
        table.rows.append((p.m, p.gap, p.stderr, p.normalized.value, p.oracle_normalized, p.kernel.mean, p.kernel.stderr, p.oracle_kernel))
    first, last = points[0], points[-1]
    table.checks.append(Check("gap_shrinks", last.gap < first.gap, f"gap {first.gap:.5f} at m={first.m}, {last.gap:.5f} at m={last.m}"))
    table.checks.append(Check("final_gap", last.gap < gap_tol, f"gap {last.gap:.5f} at m={last.m}, tolerance {gap_tol}"))
    return table
