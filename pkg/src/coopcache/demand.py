"""Exogenous demand processes: user mobility (random walk or GPS traces)
and content popularity (jittered random walk on the simplex), plus the
sliding-window supervised datasets fed to the predictor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

EARTH_RADIUS_M = 6371000.0
POPULARITY_FLOOR = 1e-4


class DatasetError(ValueError):
    """Raised for malformed or empty demand data."""


@dataclass
class Trajectory:
    """Time-ordered (t, x, y) samples in seconds and meters."""

    samples: list[tuple[float, float, float]]
    source: str = "synthetic"

    def __post_init__(self):
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DatasetError("trajectory timestamps must be strictly increasing")
        if not all(math.isfinite(v) for s in self.samples for v in s):
            raise DatasetError("trajectory contains non-finite values")

    def positions(self) -> np.ndarray:
        return np.array([(x, y) for _, x, y in self.samples], dtype=float)


@dataclass
class PopularitySeries:
    """Time-ordered probability vectors over the content library."""

    steps: list[np.ndarray]

    def __post_init__(self):
        for p in self.steps:
            if np.any(p <= 0) or np.any(p >= 1) or abs(p.sum() - 1.0) > 1e-9:
                raise DatasetError("popularity vector violates (0,1)/unit-sum")

    def matrix(self) -> np.ndarray:
        return np.array(self.steps, dtype=float)


@dataclass
class WindowedDataset:
    inputs: np.ndarray    # n_samples x (window_in * feature_dim)
    targets: np.ndarray   # n_samples x (window_out * feature_dim)
    window_in: int
    window_out: int


def zipf_popularity(num_contents: int, exponent: float = 0.8) -> np.ndarray:
    """Zipf-like initial popularity p_f proportional to 1/f^exponent."""
    ranks = np.arange(1, num_contents + 1, dtype=float)
    p = ranks**-exponent
    return p / p.sum()


def random_walk_step(pos, step_sigma, bounds, rng) -> tuple[float, float]:
    """One Gaussian step reflected at the rectangle `bounds` = (xmin, ymin, xmax, ymax)."""
    xmin, ymin, xmax, ymax = bounds
    x = pos[0] + rng.normal(0.0, step_sigma) if step_sigma > 0 else pos[0]
    y = pos[1] + rng.normal(0.0, step_sigma) if step_sigma > 0 else pos[1]
    return _reflect(x, xmin, xmax), _reflect(y, ymin, ymax)


def _reflect(v: float, lo: float, hi: float) -> float:
    span = hi - lo
    # fold into [lo, lo + 2*span) then mirror the upper half
    v = (v - lo) % (2.0 * span)
    if v > span:
        v = 2.0 * span - v
    return lo + v


def synthetic_trajectory(
    start, steps: int, step_sigma: float, bounds, rng, dt: float = 300.0
) -> Trajectory:
    """Random-walk trace sampled every `dt` seconds (default 5 minutes)."""
    pos = (float(start[0]), float(start[1]))
    samples = [(0.0, pos[0], pos[1])]
    for k in range(1, steps + 1):
        pos = random_walk_step(pos, step_sigma, bounds, rng)
        samples.append((k * dt, pos[0], pos[1]))
    return Trajectory(samples=samples, source="synthetic")


def popularity_step(p: np.ndarray, jitter_sigma: float, rng) -> np.ndarray:
    """Jitter a popularity vector and renormalize, keeping entries strictly inside (0,1)."""
    if jitter_sigma == 0:
        return np.array(p, dtype=float)
    q = np.asarray(p, dtype=float) + rng.normal(0.0, jitter_sigma, size=len(p))
    q = np.clip(q, POPULARITY_FLOOR, 1.0)
    return q / q.sum()


def popularity_series(
    num_contents: int, steps: int, jitter_sigma: float, rng, exponent: float = 0.8
) -> PopularitySeries:
    p = zipf_popularity(num_contents, exponent)
    out = [p]
    for _ in range(steps - 1):
        p = popularity_step(p, jitter_sigma, rng)
        out.append(p)
    return PopularitySeries(steps=out)


def _parse_timestamp(raw: str, line_no: int) -> float:
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        return ts.timestamp()
    except ValueError:
        raise DatasetError(f"line {line_no}: unparsable timestamp {raw!r}") from None


def load_gps_csv(path) -> list[Trajectory]:
    """Read a `timestamp,latitude,longitude` CSV into planar trajectories.

    Coordinates are projected to local meters (equirectangular about the
    trace centroid). Rows whose timestamps do not increase are dropped;
    the count of dropped rows is attached as `.dropped_rows`.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty file")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3:
                raise DatasetError(f"line {line_no}: expected 3 columns, got {len(row)}")
            t = _parse_timestamp(row[0], line_no)
            try:
                lat, lon = float(row[1]), float(row[2])
            except ValueError:
                raise DatasetError(f"line {line_no}: unparsable coordinates") from None
            rows.append((t, lat, lon))
    if not rows:
        raise DatasetError(f"{path}: no data rows")

    dropped = 0
    kept = [rows[0]]
    for r in rows[1:]:
        if r[0] > kept[-1][0]:
            kept.append(r)
        else:
            dropped += 1

    lat0 = math.radians(sum(r[1] for r in kept) / len(kept))
    lon0 = math.radians(sum(r[2] for r in kept) / len(kept))
    samples = []
    for t, lat, lon in kept:
        x = EARTH_RADIUS_M * (math.radians(lon) - lon0) * math.cos(lat0)
        y = EARTH_RADIUS_M * (math.radians(lat) - lat0)
        samples.append((t, x, y))
    traj = Trajectory(samples=samples, source="gps_csv")
    traj.dropped_rows = dropped
    return [traj]


def write_gps_csv(path, trajectory: Trajectory, lat0: float = 0.0, lon0: float = 0.0):
    """Inverse of load_gps_csv's projection: planar meters back to WGS-84 degrees."""
    lat0_r, lon0_r = math.radians(lat0), math.radians(lon0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "latitude", "longitude"])
        for t, x, y in trajectory.samples:
            lat = math.degrees(lat0_r + y / EARTH_RADIUS_M)
            lon = math.degrees(lon0_r + x / (EARTH_RADIUS_M * math.cos(lat0_r)))
            w.writerow([repr(t), repr(lat), repr(lon)])


def minmax_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (min, max) over a 2-D array of raw feature rows."""
    v = np.asarray(values, dtype=float)
    return v.min(axis=0), v.max(axis=0)


def _scale(values: np.ndarray, stats) -> np.ndarray:
    lo, hi = stats
    span = hi - lo
    out = np.empty_like(values, dtype=float)
    const = span == 0
    out[:, const] = 0.5  # constant features carry no signal
    nz = ~const
    out[:, nz] = (values[:, nz] - lo[nz]) / span[nz]
    return out


def windowize(series, window_in: int, window_out: int = 1, stats=None) -> WindowedDataset:
    """Stride-1 sliding windows over a Trajectory or PopularitySeries.

    Features are min-max scaled to [0,1]; pass `stats` from a training
    split to scale held-out data with training statistics only.
    """
    if isinstance(series, Trajectory):
        values = series.positions()
    elif isinstance(series, PopularitySeries):
        values = series.matrix()
    else:
        values = np.asarray(series, dtype=float)
        if values.ndim == 1:
            values = values[:, None]

    n = len(values)
    if n < window_in + window_out:
        raise DatasetError(
            f"series of length {n} too short for windows {window_in}+{window_out}"
        )
    if stats is None:
        stats = minmax_stats(values)
    scaled = _scale(values, stats)

    n_samples = n - window_in - window_out + 1
    inputs = np.empty((n_samples, window_in * scaled.shape[1]))
    targets = np.empty((n_samples, window_out * scaled.shape[1]))
    for k in range(n_samples):
        inputs[k] = scaled[k : k + window_in].ravel()
        targets[k] = scaled[k + window_in : k + window_in + window_out].ravel()
    return WindowedDataset(inputs=inputs, targets=targets,
                           window_in=window_in, window_out=window_out)
