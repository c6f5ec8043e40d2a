"""Spatial weights matrices and the Moran's I residual diagnostic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import ndtr

from .errors import InvalidInputError, UndefinedStatisticError
from .geo import PointSet, neighbors_within, pairwise_distances


@dataclass(frozen=True)
class DistanceBand:
    radius: float

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise InvalidInputError(f"distance band radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Knn:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class WeightsMatrix:
    """Sparse spatial connectivity with a zero diagonal.

    ``isolates`` lists row indices with no neighbors (possible under a
    distance band); their rows stay all-zero even under row normalization.
    """

    W: sp.csr_matrix
    scheme: DistanceBand | Knn
    row_normalized: bool
    isolates: np.ndarray

    @property
    def n(self) -> int:
        return self.W.shape[0]


def build_weights(ps: PointSet, scheme, row_normalize: bool = False) -> WeightsMatrix:
    """Distance-band or k-nearest-neighbor weights over a point set.

    Distance band: binary symmetric links for 0 < d_ij <= radius. KNN: each
    row links to its k nearest others, ties at the k-th distance broken by
    lower index, so the matrix is generally not symmetric.
    """
    n = ps.n
    if isinstance(scheme, DistanceBand):
        nl = neighbors_within(ps, scheme.radius)
        pos = nl.d > 0  # coincident points are not neighbors
        i, j = nl.i[pos], nl.j[pos]
        rows = np.concatenate((i, j))
        cols = np.concatenate((j, i))
        data = np.ones(rows.size, dtype=float)
    elif isinstance(scheme, Knn):
        if scheme.k >= n:
            raise InvalidInputError(f"k must be < n, got k={scheme.k}, n={n}")
        D = pairwise_distances(ps)
        rows_l, cols_l = [], []
        idx = np.arange(n)
        for i in range(n):
            drow = D[i].copy()
            drow[i] = np.inf  # never a self neighbor
            order = np.lexsort((idx, drow))
            rows_l.append(np.full(scheme.k, i))
            cols_l.append(order[: scheme.k])
        rows = np.concatenate(rows_l)
        cols = np.concatenate(cols_l)
        data = np.ones(rows.size, dtype=float)
    else:
        raise InvalidInputError(f"unknown weights scheme {scheme!r}")

    W = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    W.data[:] = 1.0  # duplicate band entries collapse to binary links
    row_sums = np.asarray(W.sum(axis=1)).ravel()
    isolates = np.flatnonzero(row_sums == 0)
    if row_normalize:
        scale = np.where(row_sums > 0, row_sums, 1.0)
        W = sp.diags(1.0 / scale) @ W
        W = W.tocsr()
    return WeightsMatrix(W, scheme, row_normalize, isolates)


def spatial_lag(wm: WeightsMatrix, x) -> np.ndarray:
    """Weighted neighbor average/sum: (Wx)_i = sum_j w_ij x_j."""
    x = np.asarray(x, dtype=float)
    if x.shape != (wm.n,):
        raise InvalidInputError(f"x must have shape ({wm.n},), got {x.shape}")
    return wm.W @ x


@dataclass(frozen=True)
class MoranResult:
    I: float
    expected: float
    variance: float
    z: float
    p_value: float


def morans_i(resid, wm: WeightsMatrix) -> MoranResult:
    """Global Moran's I with moments under the normality assumption.

    E[I] = -1/(n-1); the variance uses the standard S0/S1/S2 closed form, and
    z = (I - E[I]) / sqrt(Var). The two-sided normal p-value accompanies z.
    """
    e = np.asarray(resid, dtype=float)
    n = wm.n
    if e.shape != (n,):
        raise InvalidInputError(f"residuals must have shape ({n},), got {e.shape}")
    if n < 3:
        raise InvalidInputError(f"need n >= 3 for Moran's I, got {n}")
    W = wm.W
    s0 = float(W.sum())
    if s0 <= 0:
        raise InvalidInputError("weights matrix has no positive entries")
    dev = e - e.mean()
    denom = float(dev @ dev)
    if denom == 0.0:
        raise UndefinedStatisticError("residuals have zero variance; Moran's I is undefined")

    num = float(dev @ (W @ dev))
    I = (n / s0) * (num / denom)

    A = (W + W.T).tocsr()
    s1 = 0.5 * float(A.multiply(A).sum())
    row = np.asarray(W.sum(axis=1)).ravel()
    col = np.asarray(W.sum(axis=0)).ravel()
    s2 = float(np.sum((row + col) ** 2))

    expected = -1.0 / (n - 1)
    e_i2 = (n * n * s1 - n * s2 + 3.0 * s0 * s0) / ((n * n - 1.0) * s0 * s0)
    variance = e_i2 - expected * expected
    z = (I - expected) / np.sqrt(variance)
    p = 2.0 * float(ndtr(-abs(z)))
    return MoranResult(float(I), expected, float(variance), float(z), p)
