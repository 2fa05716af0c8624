"""How spread out are the coordinates of real inputs?

The CLT argument behind kernel universality needs
``m**(1/4) * max|x_i| / ||x||`` to vanish along a sequence of inputs of
growing dimension. This module computes that statistic (and its fourth
power), builds such sequences by stride decimation, and aggregates them
over datasets.

No centering is applied before the statistic: it is invariant to scale but
not to shifts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import INPUTS, substream

STATISTICS = ("linear", "quartic")


class ZeroVectorError(ValueError):
    pass


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"expected a non-empty 1-d vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def _max_ratio(x: np.ndarray) -> float:
    # scale by the largest entry first so huge or tiny vectors don't over/underflow
    peak = np.max(np.abs(x))
    if peak == 0.0:
        raise ZeroVectorError("statistic undefined for the zero vector")
    return 1.0 / float(np.linalg.norm(x / peak))


def hyp_statistic(x) -> float:
    """m**(1/4) * max_i |x_i| / ||x||."""
    x = _as_vector(x)
    return x.size**0.25 * _max_ratio(x)


def hyp_statistic_quartic(x) -> float:
    """m * (max_i |x_i| / ||x||)**4, the fourth power of ``hyp_statistic``."""
    x = _as_vector(x)
    return x.size * _max_ratio(x) ** 4


@dataclass(frozen=True)
class SequenceScheme:
    factors: tuple[int, ...]
    renormalize: bool = True

    def __post_init__(self):
        factors = tuple(int(k) for k in self.factors)
        if not factors or any(k < 1 for k in factors):
            raise ValueError(f"factors must be positive integers, got {self.factors}")
        if any(b <= a for a, b in zip(factors, factors[1:])):
            raise ValueError(f"factors must be strictly increasing, got {self.factors}")
        object.__setattr__(self, "factors", factors)


def subsample_sequence(x, scheme: SequenceScheme) -> list[np.ndarray]:
    """Every k-th coordinate of ``x`` for each factor k, optionally rescaled to ||x||.

    Returned in the order of ``scheme.factors``, i.e. by decreasing dimension.
    A decimated vector that is identically zero is returned as is.
    """
    x = _as_vector(x)
    if scheme.factors[-1] > x.size:
        raise ValueError(f"factor {scheme.factors[-1]} exceeds the dimension {x.size}")
    norm = np.linalg.norm(x)
    out = []
    for k in scheme.factors:
        v = x[::k].copy()
        if scheme.renormalize and k != 1:
            vn = np.linalg.norm(v)
            if vn > 0.0:
                v *= norm / vn
        out.append(v)
    return out


@dataclass(frozen=True)
class CurvePoint:
    m: int
    mean: float
    std: float
    excluded_count: int


def dataset_curve(dataset: Sequence, scheme: SequenceScheme, statistic: str = "linear") -> list[CurvePoint]:
    """Per-dimension mean and std of the statistic over a dataset.

    Points ordered by increasing m. Vectors that decimate to zero are left
    out of that dimension's mean and counted in ``excluded_count``.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")
    stat = hyp_statistic if statistic == "linear" else hyp_statistic_quartic
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    data = [_as_vector(x) for x in dataset]
    dim = data[0].size
    if any(x.size != dim for x in data):
        raise ValueError("all vectors in a dataset must share one dimension")

    per_factor: dict[int, list[float]] = {k: [] for k in scheme.factors}
    excluded = dict.fromkeys(scheme.factors, 0)
    sizes = {}
    for x in data:
        for k, v in zip(scheme.factors, subsample_sequence(x, scheme)):
            sizes[k] = v.size
            if not np.any(v):
                excluded[k] += 1
                continue
            per_factor[k].append(stat(v))

    points = []
    for k in reversed(scheme.factors):
        values = np.array(per_factor[k])
        mean = float(values.mean()) if values.size else math.nan
        std = float(values.std()) if values.size else math.nan
        points.append(CurvePoint(m=sizes[k], mean=mean, std=std, excluded_count=excluded[k]))
    return points


def random_phase_sinusoids(count: int, m: int, seed: int = 0, max_cycles: int = 8) -> np.ndarray:
    """``count`` x ``m`` array of sinusoids with random phase and a random number of cycles."""
    rng = substream(seed, INPUTS)
    cycles = rng.integers(1, max_cycles + 1, size=count)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=count)
    t = np.arange(m) / m
    return np.sin(2.0 * math.pi * cycles[:, None] * t[None, :] + phase[:, None])


def one_hot_vectors(count: int, m: int, seed: int = 0) -> np.ndarray:
    rng = substream(seed, INPUTS)
    out = np.zeros((count, m))
    out[np.arange(count), rng.integers(0, m, size=count)] = 1.0
    return out


def read_csv_vectors(path: str | Path) -> np.ndarray:
    """One vector per row; blank lines and lines starting with '#' are skipped."""
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no vectors found")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: rows have differing lengths")
    return np.array(rows)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_raw_vectors(path: str | Path) -> np.ndarray:
    """Little-endian float64 dump described by a sidecar ``<path>.json`` of the form {"count": c, "dim": d}."""
    meta = json.loads(sidecar_path(path).read_text())
    count, dim = int(meta["count"]), int(meta["dim"])
    data = np.fromfile(path, dtype="<f8")
    if data.size != count * dim:
        raise ValueError(f"{path}: expected {count}x{dim} values, found {data.size}")
    return data.reshape(count, dim).astype(float)


def write_raw_vectors(path: str | Path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype="<f8")
    if data.ndim != 2:
        raise ValueError("expected a 2-d array")
    data.tofile(path)
    sidecar_path(path).write_text(json.dumps({"count": data.shape[0], "dim": data.shape[1]}) + "\n")


def read_vectors(path: str | Path, fmt: str = "csv") -> np.ndarray:
    if fmt == "csv":
        return read_csv_vectors(path)
    if fmt == "raw":
        return read_raw_vectors(path)
    raise ValueError(f"format must be 'csv' or 'raw', got {fmt!r}")
