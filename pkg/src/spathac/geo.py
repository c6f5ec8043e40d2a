"""Coordinate handling, pairwise distances, neighbor enumeration, sampling designs.

Distances are kilometers throughout: Euclidean for projected coordinates,
great-circle (haversine) for longitude/latitude degrees.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, ParseError

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius


class Crs(Enum):
    """Coordinate reference system of a point set."""

    PROJECTED_KM = "projected_km"
    LONLAT_DEG = "lonlat_deg"


@dataclass(frozen=True)
class PointSet:
    """Observation locations with a declared coordinate system.

    ``coords`` is an (n, 2) float array. For ``Crs.LONLAT_DEG`` column 0 is
    longitude in [-180, 180] and column 1 is latitude in [-90, 90].
    """

    coords: np.ndarray
    crs: Crs

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise InvalidInputError(f"coords must be (n, 2), got shape {coords.shape}")
        if coords.shape[0] < 1:
            raise InvalidInputError("point set must contain at least one point")
        if not np.all(np.isfinite(coords)):
            raise InvalidInputError("coordinates must be finite")
        if self.crs is Crs.LONLAT_DEG:
            lon, lat = coords[:, 0], coords[:, 1]
            if np.any((lon < -180.0) | (lon > 180.0)):
                raise InvalidInputError("longitude outside [-180, 180]")
            if np.any((lat < -90.0) | (lat > 90.0)):
                raise InvalidInputError("latitude outside [-90, 90]")
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class NeighborList:
    """All pairs (i, j), i < j, with d_ij <= radius, in lexicographic order.

    Stored as parallel arrays ``i``, ``j``, ``d`` for vectorized consumption.
    """

    radius: float
    i: np.ndarray
    j: np.ndarray
    d: np.ndarray

    def __len__(self) -> int:
        return self.i.shape[0]

    @property
    def pairs(self) -> list[tuple[int, int, float]]:
        return list(zip(self.i.tolist(), self.j.tolist(), self.d.tolist()))


def _check_point(p, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (2,):
        raise InvalidInputError(f"{name} must be a (c1, c2) pair, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite coordinates")
    return arr


def _haversine_km(lon1, lat1, lon2, lat2):
    """Vectorized great-circle distance in km for degree inputs."""
    lam1, phi1 = np.radians(lon1), np.radians(lat1)
    lam2, phi2 = np.radians(lon2), np.radians(lat2)
    s_phi = np.sin((phi2 - phi1) / 2.0)
    s_lam = np.sin((lam2 - lam1) / 2.0)
    a = s_phi * s_phi + np.cos(phi1) * np.cos(phi2) * s_lam * s_lam
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def distance(a, b, crs: Crs) -> float:
    """Distance in km between two points under the given coordinate system."""
    pa = _check_point(a, "a")
    pb = _check_point(b, "b")
    if crs is Crs.PROJECTED_KM:
        return float(math.hypot(pa[0] - pb[0], pa[1] - pb[1]))
    return float(_haversine_km(pa[0], pa[1], pb[0], pb[1]))


def pairwise_distances(ps: PointSet, block: int = 2048) -> np.ndarray:
    """Full n x n distance matrix in km. Computed in row blocks to bound temporaries."""
    c = ps.coords
    n = ps.n
    out = np.empty((n, n), dtype=float)
    for start in range(0, n, block):
        stop = min(start + block, n)
        if ps.crs is Crs.PROJECTED_KM:
            dx = c[start:stop, None, 0] - c[None, :, 0]
            dy = c[start:stop, None, 1] - c[None, :, 1]
            out[start:stop] = np.hypot(dx, dy)
        else:
            out[start:stop] = _haversine_km(
                c[start:stop, None, 0], c[start:stop, None, 1], c[None, :, 0], c[None, :, 1]
            )
    return out


def _embedding(ps: PointSet) -> tuple[np.ndarray, float]:
    """Map points into a Euclidean space whose metric lower-bounds the true one.

    Projected coordinates embed as themselves. Lon/lat points embed on the
    sphere in 3-D, where the chord length 2R sin(d/2R) is a monotone function
    of the great-circle distance d.
    """
    if ps.crs is Crs.PROJECTED_KM:
        return ps.coords, 1.0
    lam = np.radians(ps.coords[:, 0])
    phi = np.radians(ps.coords[:, 1])
    R = EARTH_RADIUS_KM
    xyz = np.column_stack(
        (R * np.cos(phi) * np.cos(lam), R * np.cos(phi) * np.sin(lam), R * np.sin(phi))
    )
    return xyz, R


def _chord_radius(radius: float, R: float) -> float:
    # chord length corresponding to a great-circle distance, capped at the diameter
    half = min(radius / (2.0 * R), math.pi / 2.0)
    return 2.0 * R * math.sin(half)


def _pair_distance(ps: PointSet, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    c = ps.coords
    if ps.crs is Crs.PROJECTED_KM:
        return np.hypot(c[i, 0] - c[j, 0], c[i, 1] - c[j, 1])
    return _haversine_km(c[i, 0], c[i, 1], c[j, 0], c[j, 1])


def neighbors_within(ps: PointSet, radius: float) -> NeighborList:
    """Enumerate every pair with d_ij <= radius via a uniform spatial grid.

    Expected O(n + pairs); output ordering is lexicographic by (i, j)
    regardless of how candidate cells were visited.
    """
    if not np.isfinite(radius) or radius < 0:
        raise InvalidInputError(f"radius must be finite and >= 0, got {radius}")
    n = ps.n
    empty = NeighborList(radius, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0, dtype=float))
    if n < 2:
        return empty

    if radius == 0.0:
        # only exactly coincident coordinate rows can satisfy d <= 0
        _, inverse, counts = np.unique(ps.coords, axis=0, return_inverse=True, return_counts=True)
        ii, jj = [], []
        for g in np.flatnonzero(counts > 1):
            members = np.flatnonzero(inverse == g)
            for a, b in itertools.combinations(members.tolist(), 2):
                ii.append(a)
                jj.append(b)
        if not ii:
            return empty
        i_arr = np.asarray(ii, dtype=np.int64)
        j_arr = np.asarray(jj, dtype=np.int64)
        order = np.lexsort((j_arr, i_arr))
        return NeighborList(radius, i_arr[order], j_arr[order], np.zeros(len(ii), dtype=float))

    emb, R = _embedding(ps)
    cell = radius if ps.crs is Crs.PROJECTED_KM else _chord_radius(radius, R)
    keys = np.floor(emb / cell).astype(np.int64)
    cells = _group_rows(keys)

    dim = emb.shape[1]
    offsets = [off for off in itertools.product((-1, 0, 1), repeat=dim)]
    i_parts: list[np.ndarray] = []
    j_parts: list[np.ndarray] = []

    for key, members in cells.items():
        for off in offsets:
            other = tuple(k + o for k, o in zip(key, off))
            if other < key:
                continue  # each unordered cell pair visited once
            if other == key:
                if members.size >= 2:
                    a, b = np.triu_indices(members.size, k=1)
                    i_parts.append(members[a])
                    j_parts.append(members[b])
                continue
            cand = cells.get(other)
            if cand is None:
                continue
            ai = np.repeat(members, cand.size)
            bj = np.tile(cand, members.size)
            lo = np.minimum(ai, bj)
            hi = np.maximum(ai, bj)
            i_parts.append(lo)
            j_parts.append(hi)

    if not i_parts:
        return empty
    i_all = np.concatenate(i_parts)
    j_all = np.concatenate(j_parts)
    d_all = _pair_distance(ps, i_all, j_all)
    keep = d_all <= radius
    i_all, j_all, d_all = i_all[keep], j_all[keep], d_all[keep]
    order = np.lexsort((j_all, i_all))
    return NeighborList(radius, i_all[order], j_all[order], d_all[order])


def _group_rows(keys: np.ndarray) -> dict[tuple, np.ndarray]:
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    boundaries = np.searchsorted(inverse[order], np.arange(uniq.shape[0] + 1))
    return {
        tuple(uniq[g].tolist()): order[boundaries[g] : boundaries[g + 1]]
        for g in range(uniq.shape[0])
    }


def all_pairs(ps: PointSet) -> NeighborList:
    """Every pair (i < j), lexicographic, with distances; the radius is the max distance."""
    n = ps.n
    i, j = np.triu_indices(n, k=1)
    d = _pair_distance(ps, i, j)
    radius = float(d.max()) if d.size else 0.0
    return NeighborList(radius, i.astype(np.int64), j.astype(np.int64), d)


def make_lattice(cell_km: float, bbox: Sequence[float]) -> PointSet:
    """Regular square grid of cell centers covering a projected bounding box.

    ``bbox`` is (xmin, ymin, xmax, ymax) in km. Yields ceil(width/cell) *
    ceil(height/cell) points; the grid covers the box, it is not clipped to
    any landmass polygon.
    """
    if not np.isfinite(cell_km) or cell_km <= 0:
        raise InvalidInputError(f"cell size must be positive, got {cell_km}")
    if len(bbox) != 4 or not np.all(np.isfinite(np.asarray(bbox, dtype=float))):
        raise InvalidInputError("bbox must be four finite numbers (xmin, ymin, xmax, ymax)")
    xmin, ymin, xmax, ymax = (float(v) for v in bbox)
    if xmax <= xmin or ymax <= ymin:
        raise InvalidInputError("bbox is degenerate: require xmax > xmin and ymax > ymin")
    nx = math.ceil((xmax - xmin) / cell_km)
    ny = math.ceil((ymax - ymin) / cell_km)
    xs = xmin + (np.arange(nx) + 0.5) * cell_km
    ys = ymin + (np.arange(ny) + 0.5) * cell_km
    gx, gy = np.meshgrid(xs, ys)
    coords = np.column_stack((gx.ravel(), gy.ravel()))
    return PointSet(coords, Crs.PROJECTED_KM)


def column_values(rows: Sequence[Mapping[str, str]], name: str) -> np.ndarray:
    """Extract a numeric column from parsed tabular rows.

    Raises ParseError naming the column and the 1-based data row on a missing
    column or a cell that does not parse as a finite number.
    """
    if not rows:
        raise InvalidInputError("input table is empty")
    out = np.empty(len(rows), dtype=float)
    for k, row in enumerate(rows):
        if name not in row or row[name] is None:
            raise ParseError(f"column {name!r} missing (row {k + 1})")
        cell = str(row[name]).strip()
        try:
            val = float(cell)
        except ValueError:
            raise ParseError(f"column {name!r}, row {k + 1}: {cell!r} is not numeric") from None
        if not math.isfinite(val):
            raise ParseError(f"column {name!r}, row {k + 1}: value {cell!r} is not finite")
        out[k] = val
    return out


def load_points(rows: Sequence[Mapping[str, str]], col_spec: tuple[str, str], crs: Crs) -> PointSet:
    """Build a PointSet from tabular records, preserving row order.

    ``col_spec`` names the (c1, c2) columns: (x, y) for projected km input,
    (lon, lat) for geographic input.
    """
    c1_name, c2_name = col_spec
    c1 = column_values(rows, c1_name)
    c2 = column_values(rows, c2_name)
    if crs is Crs.LONLAT_DEG:
        for k in range(len(rows)):
            if not -180.0 <= c1[k] <= 180.0:
                raise ParseError(f"column {c1_name!r}, row {k + 1}: longitude {c1[k]} outside [-180, 180]")
            if not -90.0 <= c2[k] <= 90.0:
                raise ParseError(f"column {c2_name!r}, row {k + 1}: latitude {c2[k]} outside [-90, 90]")
    if len(rows) < 1:
        raise InvalidInputError("no data rows")
    return PointSet(np.column_stack((c1, c2)), crs)


def read_csv_rows(path) -> list[dict[str, str]]:
    """Read a UTF-8 CSV with a header row into a list of dicts."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InvalidInputError(f"{path}: file is empty (no header row)")
        rows = list(reader)
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    return rows
