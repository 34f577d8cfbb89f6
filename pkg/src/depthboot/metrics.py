"""Costmap comparison, temporal stability and depth accuracy metrics."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, fields

import numpy as np

from .costmap import OccupancyGrid, Provenance
from .errors import ConfigurationError, DataError
from .frames import DepthFrame, check_same_shape
from .synth.scene import Footprint

NEAR_BAND = (0.3, 1.0)


@dataclass(frozen=True)
class FprBreakdown:
    fpr: float
    sensor_invalid_fill: float
    hallucination: float
    inflation_artifact: float
    fp_count: int = 0


@dataclass(frozen=True)
class DepthMetrics:
    rmse: float
    mae: float
    absrel: float
    delta_125: float
    band: tuple[float, float]
    count: int


@dataclass
class FrameReport:
    config: str
    frame: int
    occupied_count: int
    inflated_count: int
    iou: float
    detection_rate: float | None
    fpr: float
    sensor_invalid_fill: float
    hallucination: float
    inflation_artifact: float
    clearance: float
    inflation_radius: float
    scale: float | None
    fallback: bool
    update_latency: float = 0.0  # ms, wall clock; kept out of the deterministic CSV


def _check_geometry(a: OccupancyGrid, b: OccupancyGrid) -> None:
    if not a.same_geometry(b):
        raise ConfigurationError("grids differ in size, resolution or origin")


def iou(test: OccupancyGrid, reference: OccupancyGrid) -> float:
    """Jaccard index of the OBSTACLE-or-INFLATED footprints; 1.0 when both are empty."""
    _check_geometry(test, reference)
    a, b = test.occupied(), reference.occupied()
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def _in_window(grid: OccupancyGrid, fp: Footprint) -> bool:
    x0, y0, x1, y1 = fp.bounds()
    gx0, gy0 = grid.origin
    gx1, gy1 = gx0 + grid.width * grid.resolution, gy0 + grid.height * grid.resolution
    return x1 >= gx0 and x0 <= gx1 and y1 >= gy0 and y0 <= gy1


def detection_rate(test: OccupancyGrid, obstacles: Sequence[Footprint], tolerance: float = 0.1) -> float | None:
    """Fraction of in-window obstacles with an OBSTACLE cell center within ``tolerance``.

    Returns None when no obstacle overlaps the grid window.
    """
    present = [fp for fp in obstacles if _in_window(test, fp)]
    if not present:
        return None
    cx, cy = test.cell_centers()
    mask = test.obstacle()
    xs, ys = cx[mask], cy[mask]
    hit = sum(bool(np.any(fp.distance(xs, ys) <= tolerance + 1e-12)) for fp in present)
    return hit / len(present)


def footprint_mask(grid: OccupancyGrid, footprints: Iterable[Footprint], tol: float = 1e-6) -> np.ndarray:
    """Cells whose square touches any footprint (closed intersection)."""
    cx, cy = grid.cell_centers()
    half = grid.resolution / 2.0
    out = np.zeros(grid.shape, dtype=bool)
    for fp in footprints:
        if fp.kind == "rect":
            x0, y0, x1, y1 = fp.params
            gx = np.maximum(np.maximum(x0 - (cx + half), (cx - half) - x1), 0.0)
            gy = np.maximum(np.maximum(y0 - (cy + half), (cy - half) - y1), 0.0)
            out |= np.hypot(gx, gy) <= tol
        else:
            px, py, r = fp.params
            nx = np.clip(px, cx - half, cx + half)
            ny = np.clip(py, cy - half, cy + half)
            out |= np.hypot(nx - px, ny - py) <= r + tol
    return out


def fpr_decompose(test: OccupancyGrid, reference: OccupancyGrid, gt_mask: np.ndarray) -> FprBreakdown:
    """False-positive rate against ``reference`` and its split by source.

    A false-positive cell is an inflation artifact when inflation is its only
    provenance; it is sensor-invalid fill when it overlaps real structure
    (``gt_mask``) and carries learned depth from ToF-rejected pixels; anything
    else is a hallucination. The rate's denominator is the reference's free
    cell count.
    """
    _check_geometry(test, reference)
    occ_t, occ_r = test.occupied(), reference.occupied()
    if np.any(occ_t & (test.provenance == 0)):
        raise ConfigurationError("occupied cells without provenance; cannot attribute false positives")
    fp = occ_t & ~occ_r
    n_fp = int(np.count_nonzero(fp))
    free_ref = int(np.count_nonzero(~occ_r))
    rate = n_fp / free_ref if free_ref else 0.0
    if n_fp == 0:
        return FprBreakdown(rate, 0.0, 0.0, 0.0, 0)
    prov = test.provenance
    infl = fp & (prov == int(Provenance.INFLATION))
    fill = fp & ~infl & np.asarray(gt_mask, dtype=bool) & test.invalid_fill & ((prov & int(Provenance.LEARNED)) != 0)
    hall = fp & ~infl & ~fill
    n_infl, n_fill, n_hall = (int(np.count_nonzero(m)) for m in (infl, fill, hall))
    return FprBreakdown(rate, n_fill / n_fp, n_hall / n_fp, n_infl / n_fp, n_fp)


def clearance(grid: OccupancyGrid, pose=None) -> float:
    """Distance from the robot cell center to the nearest occupied cell center (inf if none)."""
    occ = grid.occupied()
    if not occ.any():
        return math.inf
    r, c = grid.robot_cell(pose)
    iy, ix = np.nonzero(occ)
    d2 = (iy - r) ** 2 + (ix - c) ** 2
    return float(np.sqrt(d2.min())) * grid.resolution


def _overlap(a: OccupancyGrid, b: OccupancyGrid) -> tuple[np.ndarray, np.ndarray]:
    """OBSTACLE masks of ``a`` and ``b`` restricted to the world cells both windows cover."""
    if a.resolution != b.resolution:
        raise ConfigurationError("grids differ in resolution")
    dx = b.origin_cell[0] - a.origin_cell[0]
    dy = b.origin_cell[1] - a.origin_cell[1]
    x0, x1 = max(0, dx), min(a.width, dx + b.width)
    y0, y1 = max(0, dy), min(a.height, dy + b.height)
    if x0 >= x1 or y0 >= y1:
        raise ConfigurationError("consecutive grid windows do not overlap")
    return a.obstacle()[y0:y1, x0:x1], b.obstacle()[y0 - dy : y1 - dy, x0 - dx : x1 - dx]


def occupancy_jitter(grids: Sequence[OccupancyGrid]) -> float:
    """Mean fraction of cells whose OBSTACLE state flips between consecutive frames.

    Windows that moved with the robot are compared over their overlap only.
    """
    if len(grids) < 2:
        raise ValueError("occupancy jitter needs at least two frames")
    flips = []
    for a, b in zip(grids, grids[1:]):
        ma, mb = _overlap(a, b)
        flips.append(np.count_nonzero(ma ^ mb) / ma.size)
    return math.fsum(flips) / len(flips)


def obstacle_centroid(grid: OccupancyGrid) -> tuple[float, float] | None:
    mask = grid.obstacle()
    if not mask.any():
        return None
    cx, cy = grid.cell_centers()
    n = int(np.count_nonzero(mask))
    # correctly rounded sums keep the result independent of summation order
    return math.fsum(cx[mask].tolist()) / n, math.fsum(cy[mask].tolist()) / n


def centroid_drift(grids: Sequence[OccupancyGrid]) -> float:
    """Mean displacement (m/frame) of the OBSTACLE centroid over non-empty frames."""
    cents = [c for c in map(obstacle_centroid, grids) if c is not None]
    if len(cents) < 2:
        raise ValueError("centroid drift needs at least two frames with obstacles")
    steps = [math.hypot(x1 - x0, y1 - y0) for (x0, y0), (x1, y1) in zip(cents, cents[1:])]
    return math.fsum(steps) / len(steps)


def depth_metrics(pred: DepthFrame, gt: DepthFrame, band: tuple[float, float] = NEAR_BAND) -> DepthMetrics:
    """RMSE, MAE, AbsRel and delta<1.25 over pixels with ``lo <= gt <= hi``."""
    check_same_shape(pred, gt)
    lo, hi = band
    g = gt.depth
    sel = (g > 0) & (g >= lo) & (g <= hi)
    if not sel.any():
        raise DataError(f"no ground-truth pixels in band [{lo}, {hi}]")
    p, g = pred.depth[sel], g[sel]
    err = p - g
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.maximum(p / g, g / p)
    return DepthMetrics(
        rmse=float(np.sqrt(np.mean(err**2))),
        mae=float(np.mean(np.abs(err))),
        absrel=float(np.mean(np.abs(err) / g)),
        delta_125=float(np.mean(ratio < 1.25)),
        band=(lo, hi),
        count=int(sel.sum()),
    )


REPORT_COLUMNS = [f.name for f in fields(FrameReport) if f.name != "update_latency"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "nan")
    return str(v)


def write_frame_reports(path, reports: Iterable[FrameReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in REPORT_COLUMNS])


def write_latency(path, reports: Iterable[FrameReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "frame", "update_latency_ms"])
        for r in reports:
            w.writerow([r.config, r.frame, f"{r.update_latency:.3f}"])


def mean_std(values) -> tuple[float, float]:
    vals = np.asarray([v for v in values if v is not None and np.isfinite(v)], dtype=np.float64)
    if vals.size == 0:
        return math.nan, math.nan
    return float(vals.mean()), float(vals.std())
