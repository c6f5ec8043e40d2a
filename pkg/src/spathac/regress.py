"""OLS estimation and heteroskedasticity-robust variance benchmarks (HC0/HC1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, SingularDesignError
from .geo import PointSet

RANK_RTOL = 1e-10  # singular values below RANK_RTOL * s_max count as zero


@dataclass(frozen=True)
class Design:
    """Regression design: outcome vector, regressor matrix, column labels."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError(f"X must be 2-D, got shape {X.shape}")
        n, p = X.shape
        if y.shape != (n,):
            raise InvalidInputError(f"y must have shape ({n},), got {y.shape}")
        if n <= p:
            raise InvalidInputError(f"need n > p, got n={n}, p={p}")
        if len(self.names) != p:
            raise InvalidInputError(f"need {p} column names, got {len(self.names)}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidInputError("design contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RegressionFit:
    """OLS fit plus the cached cross-products every sandwich estimator needs."""

    beta: np.ndarray
    resid: np.ndarray
    xtx_inv: np.ndarray
    df: int
    X: np.ndarray
    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class VarianceEstimate:
    """A labeled p x p covariance matrix for beta-hat with SEs and t-statistics.

    ``non_psd`` marks estimates whose middle matrix produced a negative
    variance for at least one coefficient; the affected SEs and t-stats are
    NaN rather than silently clipped.
    """

    vcov: np.ndarray
    se: np.ndarray
    tstat: np.ndarray
    label: str
    non_psd: bool = False


def make_design(y, regressors, names=None, intercept: bool = True) -> Design:
    """Assemble a Design from an outcome and a 1-D/2-D regressor block."""
    y = np.asarray(y, dtype=float)
    R = np.asarray(regressors, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    if names is None:
        names = [f"x{k + 1}" for k in range(R.shape[1])]
    names = list(names)
    if intercept:
        R = np.column_stack((np.ones(R.shape[0]), R))
        names = ["const"] + names
    return Design(R, y, tuple(names))


def _check_rank(X: np.ndarray, names: tuple[str, ...]) -> None:
    # pivoted QR localizes the dependent column when rank is deficient
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = RANK_RTOL * (diag[0] if diag[0] > 0 else 1.0)
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        col = names[piv[bad[0]]]
        raise SingularDesignError(
            f"design matrix is rank deficient; column {col!r} is linearly dependent", column=col
        )


def fit_ols(d: Design) -> RegressionFit:
    """Least squares via QR (no normal equations), with (X'X)^-1 cached.

    Raises SingularDesignError naming a dependent column when X is rank
    deficient at the pivoted-factorization tolerance.
    """
    _check_rank(d.X, d.names)
    Q, R = np.linalg.qr(d.X)
    beta = scipy.linalg.solve_triangular(R, Q.T @ d.y)
    resid = d.y - d.X @ beta
    r_inv = scipy.linalg.solve_triangular(R, np.eye(d.p))
    xtx_inv = r_inv @ r_inv.T
    xtx_inv = 0.5 * (xtx_inv + xtx_inv.T)
    return RegressionFit(beta, resid, xtx_inv, d.n - d.p, d.X, d.names)


def hc0_meat(X: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """Sum of e_i^2 x_i x_i' in fixed ascending-index order."""
    return np.einsum("k,kp,kq->pq", resid * resid, X, X, optimize=False)


def _finalize(vcov: np.ndarray, beta: np.ndarray, label: str) -> VarianceEstimate:
    vcov = 0.5 * (vcov + vcov.T)
    diag = np.diag(vcov)
    non_psd = bool(np.any(diag < 0))
    se = np.where(diag >= 0, np.sqrt(np.abs(diag)), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, beta / se, np.nan)
    return VarianceEstimate(vcov, se, tstat, label, non_psd)


def vcov_hc(fit: RegressionFit, flavor: str = "hc1") -> VarianceEstimate:
    """Heteroskedasticity-robust sandwich; hc1 rescales hc0 by n/(n-p)."""
    if flavor not in ("hc0", "hc1"):
        raise InvalidInputError(f"flavor must be 'hc0' or 'hc1', got {flavor!r}")
    meat = hc0_meat(fit.X, fit.resid)
    vcov = fit.xtx_inv @ meat @ fit.xtx_inv
    if flavor == "hc1":
        vcov = vcov * (fit.n / fit.df)
    return _finalize(vcov, fit.beta, flavor)


def add_coordinate_controls(d: Design, ps: PointSet, degree: int = 1) -> Design:
    """Append polynomial location controls to soak up spatial trends.

    Coordinates are centered and scaled to unit standard deviation before
    powering. Degree 1 adds (c1, c2); degree 2 adds (c1^2, c2^2, c1*c2) on top.
    """
    if degree not in (1, 2):
        raise InvalidInputError(f"degree must be 1 or 2, got {degree}")
    if ps.n != d.n:
        raise InvalidInputError(f"point set has {ps.n} rows but design has {d.n}")
    c = ps.coords
    sd = c.std(axis=0)
    if np.any(sd == 0):
        sd = np.where(sd == 0, 1.0, sd)  # constant axis: leave uncentered scale
    z = (c - c.mean(axis=0)) / sd
    cols = [z[:, 0], z[:, 1]]
    names = ["c1", "c2"]
    if degree == 2:
        cols += [z[:, 0] ** 2, z[:, 1] ** 2, z[:, 0] * z[:, 1]]
        names += ["c1^2", "c2^2", "c1*c2"]
    X = np.column_stack([d.X] + cols)
    return Design(X, d.y, d.names + tuple(names))
