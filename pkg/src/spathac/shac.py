"""Spatial HAC (kernel-weighted) covariance estimator over sparse neighbor pairs.

The middle matrix accumulates e_i e_j x_i x_j' over pairs within the
bandwidth, each weighted by a compact-support kernel of normalized distance.
Summation runs in a fixed ascending-(i, j) order so repeated runs are
bit-identical regardless of caller-side threading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geo import NeighborList, PointSet, neighbors_within
from .kernels import KernelKind, kernel_weight
from .regress import RegressionFit, VarianceEstimate, _finalize, hc0_meat


@dataclass(frozen=True)
class ShacSpec:
    """Kernel and cutoff bandwidth (km) for the spatial HAC middle matrix."""

    kernel: KernelKind
    bandwidth: float

    def __post_init__(self):
        if not np.isfinite(self.bandwidth) or self.bandwidth < 0:
            raise InvalidInputError(f"bandwidth must be finite and >= 0, got {self.bandwidth}")

    @property
    def label(self) -> str:
        return f"shac({self.kernel.value},{self.bandwidth:g})"


def _active_pairs(ps: PointSet, bandwidth: float, pairs: NeighborList | None) -> NeighborList:
    if pairs is None:
        return neighbors_within(ps, bandwidth)
    if pairs.radius < bandwidth:
        raise InvalidInputError(
            f"precomputed pair list covers radius {pairs.radius} < bandwidth {bandwidth}"
        )
    keep = pairs.d <= bandwidth
    return NeighborList(bandwidth, pairs.i[keep], pairs.j[keep], pairs.d[keep])


def shac_meat(
    fit: RegressionFit,
    ps: PointSet,
    spec: ShacSpec,
    pairs: NeighborList | None = None,
) -> np.ndarray:
    """Kernel-weighted sum of residual cross-products, exactly symmetric.

    At bandwidth 0 the pair sum is empty and the result is the HC0 middle
    matrix. ``pairs`` may carry a precomputed neighbor list (radius >= the
    bandwidth) to be filtered instead of re-enumerated.
    """
    if fit.n != ps.n:
        raise InvalidInputError(f"fit has {fit.n} observations but point set has {ps.n}")
    omega = hc0_meat(fit.X, fit.resid)
    if spec.bandwidth == 0.0:
        return omega
    nl = _active_pairs(ps, spec.bandwidth, pairs)
    if len(nl) == 0:
        return omega
    w = kernel_weight(spec.kernel, nl.d / spec.bandwidth)
    t = w * fit.resid[nl.i] * fit.resid[nl.j]
    half = np.einsum("k,kp,kq->pq", t, fit.X[nl.i], fit.X[nl.j], optimize=False)
    return omega + half + half.T


def vcov_shac(
    fit: RegressionFit,
    ps: PointSet,
    spec: ShacSpec,
    pairs: NeighborList | None = None,
) -> VarianceEstimate:
    """Sandwich of the kernel-weighted middle matrix.

    Kernel/bandwidth combinations that are not positive semi-definite can
    produce negative diagonal entries; those SEs come back NaN with the
    estimate's ``non_psd`` flag set rather than being clipped.
    """
    omega = shac_meat(fit, ps, spec, pairs)
    vcov = fit.xtx_inv @ omega @ fit.xtx_inv
    return _finalize(vcov, fit.beta, spec.label)


def se_curve(
    fit: RegressionFit,
    ps: PointSet,
    kernel: KernelKind,
    bandwidths,
    pairs: NeighborList | None = None,
) -> list[tuple[float, VarianceEstimate]]:
    """Variance estimates along an ascending bandwidth grid.

    Neighbor pairs are enumerated once at the largest bandwidth and filtered
    per grid point; kernel weights are recomputed for each bandwidth.
    """
    bw = [float(b) for b in bandwidths]
    if any(b < 0 or not np.isfinite(b) for b in bw):
        raise InvalidInputError("bandwidths must be finite and >= 0")
    if any(b2 < b1 for b1, b2 in zip(bw, bw[1:])):
        raise InvalidInputError("bandwidths must be sorted ascending")
    if not bw:
        return []
    if pairs is None:
        pairs = neighbors_within(ps, max(bw))
    return [(b, vcov_shac(fit, ps, ShacSpec(kernel, b), pairs)) for b in bw]
