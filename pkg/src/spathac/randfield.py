"""Unconditional Gaussian random field simulation at arbitrary point sets.

Fields are drawn by factoring the model covariance matrix at the observation
locations and multiplying the lower-triangular factor into a seeded stream of
standard normals. Each draw is standardized to zero mean and unit standard
deviation, which is why the sill never touches the standardized output.

Streams are counter-based (Philox keyed by (master_seed, stream_id)), and
normals come from the inverse CDF applied to 52-bit uniforms, so a draw is
reproducible bit-for-bit independently of execution order or platform
threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv, ndtri

from .covariogram import default_bins, empirical_covariogram, select_bandwidth
from .errors import InvalidInputError, NotPositiveDefiniteError
from .geo import PointSet, pairwise_distances

DEFAULT_MAX_N = 12000
DEFAULT_MASTER_SEED = 1908
_JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)  # relative to the sill


class SemivariogramFamily(Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    MATERN = "matern"
    SPHERICAL = "spherical"

    @classmethod
    def from_name(cls, name: str) -> "SemivariogramFamily":
        key = name.strip().lower()
        for fam in cls:
            if fam.value == key:
                return fam
        valid = ", ".join(f.value for f in cls)
        raise InvalidInputError(f"unknown semivariogram family {name!r}; expected one of: {valid}")


@dataclass(frozen=True)
class SemivariogramModel:
    """Partial sill, range, nugget, and (for Matern) smoothness."""

    family: SemivariogramFamily
    sill: float
    range_km: float
    nugget: float = 0.0
    nu: float = 1.5

    def __post_init__(self):
        if not np.isfinite(self.sill) or self.sill <= 0:
            raise InvalidInputError(f"partial sill must be positive, got {self.sill}")
        if not np.isfinite(self.range_km) or self.range_km < 0:
            raise InvalidInputError(f"range must be >= 0, got {self.range_km}")
        if not np.isfinite(self.nugget) or self.nugget < 0:
            raise InvalidInputError(f"nugget must be >= 0, got {self.nugget}")
        if self.family is SemivariogramFamily.MATERN and (
            not np.isfinite(self.nu) or self.nu <= 0
        ):
            raise InvalidInputError(f"Matern smoothness must be positive, got {self.nu}")


def _correlation(family: SemivariogramFamily, nu: float, x: np.ndarray) -> np.ndarray:
    """Unit-sill spatial correlation at scaled distance x = h / range."""
    if family is SemivariogramFamily.EXPONENTIAL:
        return np.exp(-x)
    if family is SemivariogramFamily.GAUSSIAN:
        return np.exp(-(x**2))
    if family is SemivariogramFamily.MATERN:
        with np.errstate(invalid="ignore", over="ignore"):
            rho = (x**nu) * kv(nu, x) / (2.0 ** (nu - 1.0) * gamma_fn(nu))
        rho = np.where(x == 0.0, 1.0, rho)
        rho = np.nan_to_num(rho, nan=0.0, posinf=0.0, neginf=0.0)  # kv underflow at huge x
        return np.clip(rho, 0.0, 1.0)
    if family is SemivariogramFamily.SPHERICAL:
        inside = 1.0 - (1.5 * x - 0.5 * x**3)
        return np.where(x <= 1.0, np.clip(inside, 0.0, 1.0), 0.0)
    raise InvalidInputError(f"unhandled family {family!r}")  # pragma: no cover


def covariance(model: SemivariogramModel, h):
    """Covariance at separation h (km): sill + nugget at h = 0, decaying after.

    The nugget is the lag-zero discontinuity, so it contributes nothing at
    h > 0; the spherical family is exactly zero beyond its range.
    """
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise InvalidInputError("separation distance must be >= 0")
    scalar = h_arr.ndim == 0
    h_arr = np.atleast_1d(h_arr)
    if model.range_km == 0.0:
        c = np.where(h_arr == 0.0, model.sill + model.nugget, 0.0)
    else:
        x = h_arr / model.range_km
        c = model.sill * _correlation(model.family, model.nu, x)
        c = np.where(h_arr == 0.0, model.sill + model.nugget, c)
    return float(c[0]) if scalar else c


def gaussian_stream(master_seed: int, stream: int, n: int) -> np.ndarray:
    """n standard normals from the (master_seed, stream) counter-based stream.

    Uniforms keep 52 random bits mapped to the open interval (0, 1), then go
    through the inverse normal CDF; both steps are platform-stable.
    """
    key = np.array([np.uint64(master_seed), np.uint64(stream)], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    ints = gen.integers(0, 2**64, size=n, dtype=np.uint64, endpoint=False)
    u = ((ints >> np.uint64(12)).astype(np.float64) + 0.5) * (2.0**-52)
    return ndtri(u)


@dataclass(frozen=True)
class FieldDraw:
    values: np.ndarray
    model: SemivariogramModel
    seed: tuple[int, int]
    standardized: bool


class FieldSimulator:
    """Factor the (unit-sill) covariance once, then draw any number of fields.

    The factorization works on the sill-relative matrix, so standardized
    draws are exactly invariant to the sill. Jitter on the diagonal starts at
    1e-10 of the sill and escalates tenfold on factorization failure, up to
    1e-6; past that the model is reported as not positive definite.
    """

    def __init__(self, ps: PointSet, model: SemivariogramModel, max_n: int = DEFAULT_MAX_N):
        if ps.n > max_n:
            raise InvalidInputError(f"point set has {ps.n} points; simulator cap is {max_n}")
        self.ps = ps
        self.model = model
        self.n = ps.n
        D = pairwise_distances(ps)
        # sill-relative matrix, built sill-free so standardized draws do not
        # depend on the sill at all (the nugget enters only through its ratio)
        if model.range_km == 0.0:
            rel = np.zeros_like(D)
        else:
            rel = _correlation(model.family, model.nu, D / model.range_km)
        rel[D == 0.0] = 1.0 + model.nugget / model.sill
        self.chol, self.jitter = _factor_with_jitter(rel)

    def draw_standardized(self, master_seed: int, stream: int) -> np.ndarray:
        g = gaussian_stream(master_seed, stream, self.n)
        z = self.chol @ g
        sd = z.std(ddof=1)
        if sd == 0.0:
            raise NotPositiveDefiniteError("degenerate draw: zero sample variance")
        return (z - z.mean()) / sd

    def draw_raw(self, master_seed: int, stream: int) -> np.ndarray:
        g = gaussian_stream(master_seed, stream, self.n)
        return math.sqrt(self.model.sill) * (self.chol @ g)


def _factor_with_jitter(rel: np.ndarray) -> tuple[np.ndarray, float]:
    for j in _JITTER_LADDER:
        try:
            return np.linalg.cholesky(rel + j * np.eye(rel.shape[0])), j
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        "covariance matrix is not positive definite even with maximum jitter; "
        "the Gaussian family at long ranges is the usual cause"
    )


def draw_field(
    ps: PointSet,
    model: SemivariogramModel,
    seed: int = DEFAULT_MASTER_SEED,
    stream: int = 0,
    standardize: bool = True,
    max_n: int = DEFAULT_MAX_N,
) -> FieldDraw:
    """One-shot field draw; see FieldSimulator for the repeated-draw path."""
    sim = FieldSimulator(ps, model, max_n=max_n)
    if standardize:
        values = sim.draw_standardized(seed, stream)
    else:
        values = sim.draw_raw(seed, stream)
    return FieldDraw(values, model, (int(seed), int(stream)), standardize)


def empirical_range_check(fd: FieldDraw, ps: PointSet) -> float:
    """Covariogram-range of the raw field values: the draw's realized range."""
    bins = default_bins(ps)
    cg = empirical_covariogram(fd.values, ps, bins)
    return select_bandwidth(cg).varsigma_hat
