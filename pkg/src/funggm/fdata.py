"""Multivariate functional samples on a shared grid and cross-sectional moments.

Curves are stored densely as an (n, p, T) array: n subjects, p components,
T grid points on [0, 1]. Integrals are approximated with trapezoidal
quadrature weights attached to the grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, MissingObservation, ParseError

__all__ = [
    "TimeGrid",
    "FunctionalDataset",
    "MeanEstimate",
    "PooledCovariance",
    "trapezoid_weights",
    "load_csv",
    "estimate_mean",
    "pooled_covariance",
    "component_covariance",
]


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Trapezoidal quadrature weights for an ordered grid.

    w_1 = (t_2 - t_1)/2, w_T = (t_T - t_{T-1})/2 and
    w_k = (t_{k+1} - t_{k-1})/2 in between, so that sum(w) equals the
    grid span exactly (second-order rule, exact on uniform grids for
    piecewise-linear integrands).
    """
    points = np.asarray(points, dtype=float)
    w = np.empty_like(points)
    w[0] = (points[1] - points[0]) / 2.0
    w[-1] = (points[-1] - points[-2]) / 2.0
    if len(points) > 2:
        w[1:-1] = (points[2:] - points[:-2]) / 2.0
    return w


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Ordered observation times in [0, 1] with trapezoidal weights."""

    points: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or len(points) < 2:
            raise ValueError("grid needs at least two ordered points")
        if not np.all(np.diff(points) > 0):
            raise ValueError("grid points must be strictly increasing")
        if points[0] < 0.0 or points[-1] > 1.0:
            raise ValueError("grid points must lie in [0, 1]")
        weights = self.weights
        if weights is None:
            weights = trapezoid_weights(points)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != points.shape:
                raise ValueError("weights must match points in length")
            if np.any(weights <= 0):
                raise ValueError("weights must be positive")
            span = points[-1] - points[0]
            if abs(weights.sum() - span) > 1e-12:
                raise ValueError("weights must sum to the grid span")
        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class FunctionalDataset:
    """Observed curves for n subjects and p components on a common grid."""

    grid: TimeGrid
    values: np.ndarray  # (n, p, T)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise ValueError("values must have shape (n, p, T)")
        if values.shape[2] != self.grid.size:
            raise ValueError("third axis of values must match the grid length")
        # The estimators below are well-defined down to a single subject or
        # component, so only n >= 1, p >= 1 is enforced here.
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("need at least one subject and one component")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n_subjects(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MeanEstimate:
    """Cross-sectional mean curves, one row per component."""

    values: np.ndarray  # (p, T)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("mean must have shape (p, T)")
        if not np.all(np.isfinite(values)):
            raise ValueError("mean must be finite")
        object.__setattr__(self, "values", _readonly(values))


@dataclass(frozen=True)
class PooledCovariance:
    """Component-averaged covariance kernel evaluated on the grid."""

    kernel: np.ndarray  # (T, T)

    def __post_init__(self):
        kernel = np.asarray(self.kernel, dtype=float)
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
            raise ValueError("kernel must be square")
        if not np.all(np.isfinite(kernel)):
            raise ValueError("kernel must be finite")
        if np.max(np.abs(kernel - kernel.T)) > 1e-10:
            raise ValueError("kernel must be symmetric within 1e-10")
        kernel = (kernel + kernel.T) / 2.0
        eigs = np.linalg.eigvalsh(kernel)
        if eigs[0] < -1e-8 * max(eigs[-1], 0.0):
            raise ValueError("kernel must be positive semidefinite")
        object.__setattr__(self, "kernel", _readonly(kernel))


def estimate_mean(data: FunctionalDataset) -> MeanEstimate:
    """Pointwise average over subjects, per component."""
    return MeanEstimate(data.values.mean(axis=0))


def pooled_covariance(data: FunctionalDataset, mean: MeanEstimate) -> PooledCovariance:
    """Average of the per-component cross-sectional covariance kernels.

    Entry (k, m) is (1/p) sum_j (1/n) sum_i c_ij(t_k) c_ij(t_m) for the
    centered curves c_ij = X_ij - mean_j. Divisor n, not n - 1.
    """
    centered = data.values - mean.values[None, :, :]
    n, p, _ = centered.shape
    kernel = np.einsum("ijk,ijm->km", centered, centered) / (n * p)
    return PooledCovariance((kernel + kernel.T) / 2.0)


def component_covariance(data: FunctionalDataset, mean: MeanEstimate, j: int) -> np.ndarray:
    """Cross-sectional covariance kernel of component j (1-based index)."""
    if not 1 <= j <= data.n_components:
        raise IndexError(f"component index {j} outside 1..{data.n_components}")
    centered = data.values[:, j - 1, :] - mean.values[j - 1][None, :]
    kernel = centered.T @ centered / data.n_subjects
    return (kernel + kernel.T) / 2.0


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} {text!r}", line) from None


def _parse_int(text: str, line: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} {text!r}", line) from None


def _load_long(rows, first_line: int) -> FunctionalDataset:
    cells: dict[tuple[int, int], dict[float, float]] = {}
    for line, row in rows:
        if len(row) != 4:
            raise ParseError(f"expected 4 columns, got {len(row)}", line)
        i = _parse_int(row[0], line, "subject")
        j = _parse_int(row[1], line, "component")
        t = _parse_float(row[2], line, "time")
        v = _parse_float(row[3], line, "value")
        times = cells.setdefault((i, j), {})
        if t in times:
            raise ParseError(f"duplicate cell (subject={i}, component={j}, time={t})", line)
        times[t] = v
    if not cells:
        raise MissingObservation("no observations found")

    time_sets = {key: frozenset(times) for key, times in cells.items()}
    full = max(time_sets.values(), key=len)
    for key, ts in time_sets.items():
        if not ts <= full:
            raise GridMismatch(
                f"subject {key[0]}, component {key[1]} observed on a different grid"
            )

    subjects = sorted({i for i, _ in cells})
    components = sorted({j for _, j in cells})
    grid_points = np.array(sorted(full))
    for i in subjects:
        for j in components:
            ts = time_sets.get((i, j), frozenset())
            if ts != full:
                missing = sorted(full - ts)
                raise MissingObservation(
                    f"subject {i}, component {j} missing value at time {missing[0]}"
                    if missing
                    else f"subject {i}, component {j} absent"
                )

    grid = TimeGrid(grid_points)
    values = np.empty((len(subjects), len(components), len(grid_points)))
    for a, i in enumerate(subjects):
        for b, j in enumerate(components):
            times = cells[(i, j)]
            values[a, b, :] = [times[t] for t in grid_points]
    return FunctionalDataset(grid, values)


def _load_wide(header, header_line, rows) -> FunctionalDataset:
    if len(header) < 3 or header[0] != "grid":
        raise ParseError("wide header must start with 'grid' followed by times", header_line)
    points = np.array([_parse_float(t, header_line, "grid time") for t in header[1:]])
    if not np.all(np.diff(points) > 0):
        raise GridMismatch("wide grid header times must be strictly increasing")
    T = len(points)

    seen: dict[tuple[int, int], np.ndarray] = {}
    for line, row in rows:
        if len(row) != T + 2:
            raise ParseError(f"expected {T + 2} columns, got {len(row)}", line)
        i = _parse_int(row[0], line, "subject")
        j = _parse_int(row[1], line, "component")
        if (i, j) in seen:
            raise ParseError(f"duplicate row for subject {i}, component {j}", line)
        seen[(i, j)] = np.array([_parse_float(v, line, "value") for v in row[2:]])
    if not seen:
        raise MissingObservation("no observations found")

    subjects = sorted({i for i, _ in seen})
    components = sorted({j for _, j in seen})
    values = np.empty((len(subjects), len(components), T))
    for a, i in enumerate(subjects):
        for b, j in enumerate(components):
            if (i, j) not in seen:
                raise MissingObservation(f"no row for subject {i}, component {j}")
            values[a, b, :] = seen[(i, j)]
    return FunctionalDataset(TimeGrid(points), values)


def load_csv(path, layout: str = "long") -> FunctionalDataset:
    """Read a functional dataset from CSV.

    Long layout: header ``subject,component,time,value`` then one row per
    observed cell. Wide layout: header ``grid,<t1>,...,<tT>`` then rows
    ``subject,component,<v1>,...,<vT>``. Every (subject, component) pair
    must cover the full shared grid exactly once.
    """
    if layout not in ("long", "wide"):
        raise ValueError(f"unknown layout {layout!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        numbered = [(line, row) for line, row in enumerate(reader, start=1) if row]
    if not numbered:
        raise ParseError("empty file", 1)
    header_line, header = numbered[0]
    header = [h.strip() for h in header]
    body = numbered[1:]

    if layout == "long":
        expected = ["subject", "component", "time", "value"]
        if [h.lower() for h in header] != expected:
            raise ParseError(f"expected header {','.join(expected)}", header_line)
        return _load_long(body, header_line)
    return _load_wide(header, header_line, body)
