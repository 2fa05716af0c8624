"""Weight distributions: samplers, analytic moments and variance calibration.

Each family is a frozen dataclass with one scale parameter that
``calibrate`` rescales; shape parameters (``nu``, ``beta``) are never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import ClassVar, Iterator

import numpy as np
from scipy import integrate

from .rng import CHUNK_ROWS, WEIGHTS, substream


class InfiniteMomentError(ValueError):
    """A requested moment of the distribution diverges."""


def _gamma_ratio(num: float, den: float) -> float:
    return math.exp(math.lgamma(num) - math.lgamma(den))


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be a positive finite real, got {value}")
    return value


@dataclass(frozen=True)
class DistributionSpec:
    """Base class; subclasses define one zero-mean, symmetric family."""

    family: ClassVar[str] = ""
    scale_param: ClassVar[str] = ""

    def unit_second_moment(self) -> float:
        """E[W_i^2] of the same family at unit scale."""
        raise NotImplementedError

    def second_moment(self) -> float:
        return getattr(self, self.scale_param) ** 2 * self.unit_second_moment()

    def abs_third_moment(self) -> float:
        raise NotImplementedError

    def rotationally_invariant(self) -> bool:
        return False

    def _draw(self, rng: np.random.Generator, rows: int, m: int) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_second_moment(self, target_w2: float) -> DistributionSpec:
        target_w2 = _positive("target_w2", target_w2)
        # depends on the shape parameters only, so recalibrating is a no-op
        return replace(self, **{self.scale_param: math.sqrt(target_w2 / self.unit_second_moment())})


@dataclass(frozen=True)
class Gaussian(DistributionSpec):
    sigma: float = 1.0

    family: ClassVar[str] = "gaussian"
    scale_param: ClassVar[str] = "sigma"

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def unit_second_moment(self) -> float:
        return 1.0

    def abs_third_moment(self) -> float:
        return self.sigma**3 * 2.0 * math.sqrt(2.0 / math.pi)

    def rotationally_invariant(self) -> bool:
        return True

    def _draw(self, rng, rows, m):
        return self.sigma * rng.standard_normal((rows, m))


@dataclass(frozen=True)
class MultivariateT(DistributionSpec):
    """Multivariate t with identity shape matrix times ``scale**2``.

    A row is ``scale * z * sqrt(nu / u)`` with z standard normal and a single
    chi-square(nu) draw ``u`` per row, so coordinates are uncorrelated but
    not independent.
    """

    nu: float = 5.0
    scale: float = 1.0

    family: ClassVar[str] = "t"
    scale_param: ClassVar[str] = "scale"

    def __post_init__(self):
        nu = float(self.nu)
        if not (math.isfinite(nu) and nu > 2.0):
            raise InfiniteMomentError(f"multivariate t needs nu > 2 for a finite second moment, got {nu}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def unit_second_moment(self) -> float:
        return self.nu / (self.nu - 2.0)

    def abs_third_moment(self) -> float:
        if self.nu <= 3.0:
            return math.inf
        nu = self.nu
        log_norm = math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0) - 0.5 * math.log(nu * math.pi)

        def integrand(w):
            return w**3 * math.exp(log_norm - (nu + 1.0) / 2.0 * math.log1p(w * w / nu))

        value, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-8, epsrel=1e-10, limit=400)
        return self.scale**3 * 2.0 * value

    def rotationally_invariant(self) -> bool:
        return True

    def _draw(self, rng, rows, m):
        z = rng.standard_normal((rows, m))
        u = rng.gamma(self.nu / 2.0, 2.0, size=rows)
        return self.scale * z * np.sqrt(self.nu / u)[:, None]


@dataclass(frozen=True)
class GeneralizedGaussian(DistributionSpec):
    """IID coordinates with density proportional to exp(-|w/alpha|**beta)."""

    alpha: float = 1.0
    beta: float = 2.0

    family: ClassVar[str] = "gengauss"
    scale_param: ClassVar[str] = "alpha"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive("beta", self.beta))

    def unit_second_moment(self) -> float:
        return _gamma_ratio(3.0 / self.beta, 1.0 / self.beta)

    def abs_third_moment(self) -> float:
        return self.alpha**3 * _gamma_ratio(4.0 / self.beta, 1.0 / self.beta)

    def rotationally_invariant(self) -> bool:
        return self.beta == 2.0

    def _draw(self, rng, rows, m):
        # |W/alpha|**beta ~ Gamma(1/beta, 1)
        g = rng.standard_gamma(1.0 / self.beta, size=(rows, m))
        sign = np.where(rng.random((rows, m)) < 0.5, -1.0, 1.0)
        return self.alpha * sign * g ** (1.0 / self.beta)


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    bound: float = 1.0

    family: ClassVar[str] = "uniform"
    scale_param: ClassVar[str] = "bound"

    def __post_init__(self):
        object.__setattr__(self, "bound", _positive("bound", self.bound))

    def unit_second_moment(self) -> float:
        return 1.0 / 3.0

    def abs_third_moment(self) -> float:
        return self.bound**3 / 4.0

    def _draw(self, rng, rows, m):
        return rng.uniform(-self.bound, self.bound, size=(rows, m))


@dataclass(frozen=True)
class Laplace(DistributionSpec):
    b: float = 1.0

    family: ClassVar[str] = "laplace"
    scale_param: ClassVar[str] = "b"

    def __post_init__(self):
        object.__setattr__(self, "b", _positive("b", self.b))

    def unit_second_moment(self) -> float:
        return 2.0

    def abs_third_moment(self) -> float:
        return 6.0 * self.b**3

    def _draw(self, rng, rows, m):
        return rng.laplace(0.0, self.b, size=(rows, m))


FAMILIES: dict[str, type[DistributionSpec]] = {
    cls.family: cls for cls in (Gaussian, MultivariateT, GeneralizedGaussian, Uniform, Laplace)
}


def second_moment(spec: DistributionSpec) -> float:
    return spec.second_moment()


def abs_third_moment(spec: DistributionSpec) -> float:
    """E|W_i|^3, or ``math.inf`` when it diverges."""
    return spec.abs_third_moment()


def is_rotationally_invariant(spec: DistributionSpec) -> bool:
    return spec.rotationally_invariant()


def calibrate(spec: DistributionSpec, target_w2: float) -> DistributionSpec:
    """Rescale ``spec`` so that its E[W_i^2] equals ``target_w2``."""
    return spec.with_second_moment(target_w2)


def row_chunks(n: int) -> Iterator[tuple[int, int]]:
    """Yield ``(chunk_index, rows)`` for the fixed-size row blocks of an n-row draw."""
    for c, start in enumerate(range(0, n, CHUNK_ROWS)):
        yield c, min(CHUNK_ROWS, n - start)


def sample_chunk(spec: DistributionSpec, rows: int, m: int, seed: int, chunk: int, stream: tuple[int, ...] = ()) -> np.ndarray:
    """Rows ``chunk*CHUNK_ROWS ...`` of the weight matrix keyed by ``(seed, stream)``."""
    rng = substream(seed, WEIGHTS, *stream, chunk)
    return spec._draw(rng, rows, m)


def sample_matrix(spec: DistributionSpec, n: int, m: int, seed: int, stream: tuple[int, ...] = ()) -> np.ndarray:
    """An n x m matrix whose rows are independent weight vectors.

    Deterministic in ``(spec, n, m, seed, stream)``; block ``c`` of
    ``CHUNK_ROWS`` rows comes from its own keyed stream.
    """
    if n < 1 or m < 1:
        raise ValueError(f"matrix dimensions must be positive, got {n} x {m}")
    try:
        out = np.empty((n, m))
    except MemoryError as exc:
        raise MemoryError(f"cannot allocate a {n} x {m} weight matrix") from exc
    for c, rows in row_chunks(n):
        out[c * CHUNK_ROWS : c * CHUNK_ROWS + rows] = sample_chunk(spec, rows, m, seed, c, stream)
    return out
