"""Compact-support kernel weight functions of normalized distance u = d / bandwidth.

All kernels satisfy K(0) = 1 and K(u) = 0 for u > 1. The truncated Gaussian
keeps exp(-u^2/2) on (0, 1) and drops to zero at u >= 1; unlike the Gaussian
density it carries no normalization constant, so K(0) = 1 like the others.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import InvalidInputError


class KernelKind(Enum):
    BARTLETT = "bartlett"
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"
    PARZEN = "parzen"
    QUARTIC_BIWEIGHT = "biweight"
    GAUSSIAN_TRUNCATED = "gaussian"

    @classmethod
    def from_name(cls, name: str) -> "KernelKind":
        key = name.strip().lower()
        for kind in cls:
            if kind.value == key:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise InvalidInputError(f"unknown kernel {name!r}; expected one of: {valid}")


def kernel_weight(kind: KernelKind, u):
    """Evaluate the kernel at normalized distance(s) u >= 0.

    Accepts scalars or arrays; returns the same shape. Boundary conventions
    follow each formula's indicator literally: at u = 1 the Uniform kernel is
    still 1 (closed indicator) while all others are 0.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise InvalidInputError("normalized distance must be >= 0")
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)

    if kind is KernelKind.UNIFORM:
        w = (u_arr <= 1.0).astype(float)
    elif kind is KernelKind.BARTLETT:
        w = np.where(u_arr <= 1.0, 1.0 - u_arr, 0.0)
    elif kind is KernelKind.EPANECHNIKOV:
        w = np.where(u_arr <= 1.0, 1.0 - u_arr**2, 0.0)
    elif kind is KernelKind.PARZEN:
        low = 1.0 - 6.0 * u_arr**2 + 6.0 * u_arr**3
        high = 2.0 * (1.0 - u_arr) ** 3
        w = np.where(u_arr < 0.5, low, np.where(u_arr <= 1.0, high, 0.0))
    elif kind is KernelKind.QUARTIC_BIWEIGHT:
        w = np.where(u_arr <= 1.0, (1.0 - u_arr**2) ** 2, 0.0)
    elif kind is KernelKind.GAUSSIAN_TRUNCATED:
        # open indicator at 1; at u = 0 the formula already gives exp(0) = 1
        w = np.where(u_arr < 1.0, np.exp(-0.5 * u_arr**2), 0.0)
    else:  # pragma: no cover
        raise InvalidInputError(f"unhandled kernel kind {kind!r}")

    w = np.clip(w, 0.0, 1.0)
    return float(w[0]) if scalar else w


ALL_KERNELS = tuple(KernelKind)
