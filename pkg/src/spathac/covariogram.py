"""Empirical covariogram of residuals and the covariogram-range bandwidth selector.

The covariogram bins mean residual cross-products by pair distance; the
selected bandwidth is the first bin center at which the binned covariance
crosses zero (or falls inside a tolerance band when eta > 0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InsufficientPairsError, InvalidInputError
from .geo import NeighborList, PointSet, neighbors_within, pairwise_distances
from .regress import RegressionFit

DEFAULT_N_BINS = 150
EXACT_DIAMETER_MAX_N = 5000


@dataclass(frozen=True)
class BinSpec:
    """Equal-width, non-overlapping distance classes on (0, cutoff]."""

    cutoff: float
    n_bins: int = DEFAULT_N_BINS

    def __post_init__(self):
        if not np.isfinite(self.cutoff) or self.cutoff <= 0:
            raise InvalidInputError(f"cutoff must be positive, got {self.cutoff}")
        if self.n_bins < 2:
            raise InvalidInputError(f"need at least 2 bins, got {self.n_bins}")

    @property
    def width(self) -> float:
        return self.cutoff / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * self.width


@dataclass(frozen=True)
class Covariogram:
    """Binned mean residual cross-products; empty bins hold NaN, not zero."""

    centers: np.ndarray
    chat: np.ndarray
    counts: np.ndarray
    c0: float
    bins: BinSpec

    @property
    def nonempty(self) -> np.ndarray:
        return self.counts > 0


class BandwidthStatus(Enum):
    CROSSED = "crossed"
    NO_CROSSING_CAPPED = "no_crossing_capped"
    IMMEDIATE = "immediate"


@dataclass(frozen=True)
class BandwidthEstimate:
    varsigma_hat: float
    bin_index: int | None
    eta: float
    status: BandwidthStatus


class CovariogramBinner:
    """Pair enumeration and bin assignment for one (point set, bin spec) pair.

    Building the binner is the O(n^2)-ish part; `chat` per residual vector is
    then a single weighted bincount, which is what makes repeated evaluation
    inside Monte Carlo loops cheap.
    """

    def __init__(self, ps: PointSet, bins: BinSpec, pairs: NeighborList | None = None):
        if pairs is None:
            pairs = neighbors_within(ps, bins.cutoff)
        keep = pairs.d <= bins.cutoff
        d = pairs.d[keep]
        self.i = pairs.i[keep]
        self.j = pairs.j[keep]
        # half-open [lower, upper) bins with the final bin closed at the cutoff
        idx = np.floor(d / bins.width).astype(np.int64)
        idx[idx >= bins.n_bins] = bins.n_bins - 1
        self.bin_index = idx
        self.bins = bins
        self.n = ps.n
        self.counts = np.bincount(idx, minlength=bins.n_bins).astype(np.int64)

    def covariogram(self, resid: np.ndarray) -> Covariogram:
        resid = np.asarray(resid, dtype=float)
        if resid.shape != (self.n,):
            raise InvalidInputError(f"residuals must have shape ({self.n},), got {resid.shape}")
        if not np.any(self.counts > 0):
            raise InsufficientPairsError("no pair falls inside any distance bin")
        sums = np.bincount(self.bin_index, weights=resid[self.i] * resid[self.j], minlength=self.bins.n_bins)
        with np.errstate(invalid="ignore"):
            chat = np.where(self.counts > 0, sums / np.maximum(self.counts, 1), np.nan)
        c0 = float(np.mean(resid * resid))
        return Covariogram(self.bins.centers, chat, self.counts, c0, self.bins)


def empirical_covariogram(resid, ps: PointSet, bins: BinSpec) -> Covariogram:
    """Bin mean residual products by pair distance; self-pairs are excluded."""
    return CovariogramBinner(ps, bins).covariogram(np.asarray(resid, dtype=float))


def max_pairwise_distance(ps: PointSet) -> float:
    """Exact diameter for small n; convex-hull-vertex diameter beyond that."""
    if ps.n <= EXACT_DIAMETER_MAX_N:
        return _exact_diameter(ps)
    try:
        from scipy.spatial import ConvexHull

        hull = ConvexHull(ps.coords)
        sub = PointSet(ps.coords[hull.vertices], ps.crs)
        return _exact_diameter(sub)
    except Exception:
        return _exact_diameter(ps)


def _exact_diameter(ps: PointSet) -> float:
    best = 0.0
    block = 2048
    c = ps.coords
    for start in range(0, ps.n, block):
        stop = min(start + block, ps.n)
        d = _block_dist(c[start:stop], c, ps)
        best = max(best, float(d.max()))
    return best


def _block_dist(a: np.ndarray, b: np.ndarray, ps: PointSet) -> np.ndarray:
    from .geo import Crs, _haversine_km

    if ps.crs is Crs.PROJECTED_KM:
        return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    return _haversine_km(a[:, None, 0], a[:, None, 1], b[None, :, 0], b[None, :, 1])


def default_bins(ps: PointSet) -> BinSpec:
    """Cutoff at two-thirds of the maximum inter-point distance, 150 bins."""
    if ps.n < 2:
        raise InvalidInputError("need at least two points to build distance bins")
    return BinSpec(cutoff=(2.0 / 3.0) * max_pairwise_distance(ps), n_bins=DEFAULT_N_BINS)


def select_bandwidth(cg: Covariogram, eta: float = 0.0) -> BandwidthEstimate:
    """First bin center at which the covariogram enters the tolerance band.

    With the default eta = 0 the condition is a sign crossing, chat <= 0.
    Empty bins are skipped. If the first populated bin already satisfies the
    condition the status is IMMEDIATE (residuals look like white noise); if
    no bin does, the cutoff is returned with status NO_CROSSING_CAPPED.
    """
    if eta < 0:
        raise InvalidInputError(f"eta must be >= 0, got {eta}")
    live = np.flatnonzero(cg.nonempty)
    if live.size == 0:
        raise InsufficientPairsError("covariogram has no populated bins")
    vals = cg.chat[live]
    hit = (vals <= 0.0) if eta == 0.0 else (np.abs(vals) <= eta)
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return BandwidthEstimate(float(cg.bins.cutoff), None, eta, BandwidthStatus.NO_CROSSING_CAPPED)
    b = int(live[idx[0]])
    status = BandwidthStatus.IMMEDIATE if idx[0] == 0 else BandwidthStatus.CROSSED
    return BandwidthEstimate(float(cg.centers[b]), b, eta, status)


def select_bandwidth_for_fit(
    fit: RegressionFit,
    ps: PointSet,
    bins: BinSpec | None = None,
    eta: float = 0.0,
) -> BandwidthEstimate:
    """Covariogram-range bandwidth of the fit's residuals with default binning."""
    if fit.n != ps.n:
        raise InvalidInputError(f"fit has {fit.n} observations but point set has {ps.n}")
    if bins is None:
        bins = default_bins(ps)
    return select_bandwidth(empirical_covariogram(fit.resid, ps, bins), eta)


def write_covariogram_csv(cg: Covariogram, path) -> None:
    """Plot-ready CSV with one row per bin: center, chat (empty for no pairs), count."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h", "chat", "count"])
        for h, c, k in zip(cg.centers, cg.chat, cg.counts):
            writer.writerow([repr(float(h)), "" if k == 0 else repr(float(c)), int(k)])
