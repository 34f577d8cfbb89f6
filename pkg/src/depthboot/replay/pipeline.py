"""Sequence generation, costmap replay and depth evaluation over bundles."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..costmap import CostmapSetup, FrameInputs, GridConfig, OccupancyGrid, Sources, build_frame_costmap
from ..errors import ConfigurationError, DataError, ScenarioError, UnreliableScale
from ..frames import DepthFrame
from ..fusion import FusionConfig, apply_scale, estimate_scale, fuse_depth, tof_gate
from ..metrics import (
    DepthMetrics,
    FrameReport,
    centroid_drift,
    clearance,
    depth_metrics,
    detection_rate,
    footprint_mask,
    fpr_decompose,
    iou,
    mean_std,
    occupancy_jitter,
    write_frame_reports,
    write_latency,
)
from ..synth import (
    render_gt_depth,
    render_learned_depth,
    render_lidar_scan,
    render_semantic_labels,
    render_tof_frame,
)
from ..synth.scene import CorridorScene
from . import bundle as bfmt
from .configs import FALLBACK_SOURCES, NamedConfig, resolve
from .scenario import Scenario, build_scene, inflation_from_dict

log = logging.getLogger(__name__)

STREAM_TOF, STREAM_LEARNED = 0, 1


def frame_seed(seed: int, k: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(k), int(stream)])


def generate_sequence(scenario: Scenario, out_dir, seed: int | None = None) -> bfmt.Bundle:
    """Render every frame of ``scenario`` into a bundle directory."""
    if seed is not None:
        scenario = scenario.with_seed(seed)
    seed = scenario.seed
    root = Path(out_dir)
    for sub in ("frames", "lidar"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    # records from an earlier, longer run would otherwise survive
    for stale in [*root.glob("frames/*.dfb"), *root.glob("lidar/*.dls")]:
        stale.unlink()

    scene = scenario.scene()
    cam = scenario.camera()
    tof_model = scenario.tof_model()
    learned_model = scenario.learned_model()
    lidar_model = scenario.lidar_model()
    poses = scenario.poses()
    stamps = scenario.timestamps()

    invalid = []
    for k, (pose, t) in enumerate(zip(poses, stamps)):
        pose = tuple(float(v) for v in pose)
        gt = render_gt_depth(scene, pose, cam, t)
        labels = render_semantic_labels(scene, pose, cam, t)
        tof = render_tof_frame(gt, scene, pose, cam, tof_model, frame_seed(seed, k, STREAM_TOF))
        learned = render_learned_depth(gt, learned_model, frame_seed(seed, k, STREAM_LEARNED))
        scan = render_lidar_scan(scene, pose, lidar_model, t)
        bfmt.write_frame(root, k, tof, learned, gt, labels, scan)
        invalid.append(tof.invalid_fraction(scenario.spec.fusion.tau))

    spec = scenario.spec
    manifest = {
        "format_version": bfmt.FORMAT_VERSION,
        "name": spec.name,
        "seed": seed,
        "frame_count": scenario.frame_count,
        "camera": cam.to_dict(),
        "grid": spec.grid.model_dump(),
        "fusion": spec.fusion.model_dump(),
        "inflation": spec.inflation.model_dump(),
        "configurations": scenario.configurations,
        "scene": spec.scene.model_dump(mode="json"),
        "poses": [[float(v) for v in p] for p in poses],
        "timestamps": [float(t) for t in stamps],
        "confidence": "synthetic binary: valid pixels 1.0, dropped 0.1",
        "tof_invalid_fraction": {"mean": float(np.mean(invalid)), "per_frame": [float(v) for v in invalid]},
    }
    bfmt.write_manifest(root, manifest)
    return bfmt.Bundle(root)


@dataclass
class ReplayContext:
    """Everything a costmap update needs besides the frame itself."""

    setup: CostmapSetup
    scene: CorridorScene
    inflation: dict

    @classmethod
    def from_bundle(cls, b: bfmt.Bundle) -> ReplayContext:
        m = b.manifest
        try:
            setup = CostmapSetup(b.camera, GridConfig(**m["grid"]), FusionConfig(**m["fusion"]))
            return cls(setup, build_scene(m["scene"]), m["inflation"])
        except (KeyError, TypeError, ScenarioError, ConfigurationError) as exc:
            raise DataError(f"manifest.json is missing or has a bad field: {exc}") from None

    def inflation_for(self, cfg: NamedConfig):
        return inflation_from_dict(self.inflation, cfg.strategy, self.scene.corridor_axis)

    def gt_mask(self, grid: OccupancyGrid, t: float) -> np.ndarray:
        band = self.setup.grid
        fps = [f for f in self.scene.structure_footprints(t) if f.z_range[1] >= band.h_min and f.z_range[0] <= band.h_max]
        return footprint_mask(grid, fps)


@dataclass
class CalibratedFrame:
    record: bfmt.FrameRecord
    scale: float | None
    learned_metric: DepthFrame | None

    @property
    def fallback(self) -> bool:
        return self.learned_metric is None


def calibrate(record: bfmt.FrameRecord, fusion: FusionConfig) -> CalibratedFrame:
    try:
        est = estimate_scale(record.learned, record.tof, fusion)
    except UnreliableScale as exc:
        log.warning("frame %d: %s; falling back to L+S", record.index, exc)
        return CalibratedFrame(record, None, None)
    return CalibratedFrame(record, est.s, apply_scale(record.learned, est.s))


def build_config_grid(cfg: NamedConfig, frame: CalibratedFrame, ctx: ReplayContext) -> OccupancyGrid:
    rec = frame.record
    sources = cfg.sources
    if Sources.D in sources and frame.fallback:
        sources = FALLBACK_SOURCES
    inputs = FrameInputs(rec.pose, rec.scan, rec.tof, frame.learned_metric, rec.labels)
    return build_frame_costmap(sources, ctx.inflation_for(cfg), inputs, ctx.setup)


def ordered_configs(names) -> list[str]:
    """Requested names with each one's reference configuration ahead of it."""
    out: list[str] = []
    for n in names:
        ref = resolve(n).reference
        for c in (ref, n):
            if c not in out:
                out.append(c)
    refs = [c for c in out if resolve(c).reference == c]
    return refs + [c for c in out if c not in refs]


@dataclass
class ReplayResult:
    reports: list[FrameReport]
    summary: list[dict]
    grids: dict[str, list[OccupancyGrid]] = field(repr=False)

    def summary_for(self, name: str) -> dict:
        return next(row for row in self.summary if row["config"] == name)


SUMMARY_COLUMNS = [
    "config",
    "reference",
    "frames",
    "occupied_mean",
    "occupied_std",
    "delta_pct",
    "inflated_mean",
    "iou_mean",
    "detection_mean",
    "fpr_mean",
    "sensor_invalid_fill_mean",
    "hallucination_mean",
    "inflation_artifact_mean",
    "clearance_mean",
    "inflation_radius_mean",
    "scale_mean",
    "scale_cv",
    "fallback_frames",
    "jitter",
    "drift",
]


def _sequence_metric(fn, grids) -> float:
    try:
        return fn(grids)
    except ValueError:
        return math.nan


def run_replay(bundle_dir, configurations, out_dir=None) -> ReplayResult:
    """Build every configuration's costmap on every frame and report against its reference."""
    b = bundle_dir if isinstance(bundle_dir, bfmt.Bundle) else bfmt.Bundle(bundle_dir)
    ctx = ReplayContext.from_bundle(b)
    names = ordered_configs(configurations)
    cfgs = {n: resolve(n) for n in names}
    reports: list[FrameReport] = []
    grids: dict[str, list[OccupancyGrid]] = {n: [] for n in names}

    for rec in b.frames():
        frame = calibrate(rec, ctx.setup.fusion)
        obstacles = ctx.scene.obstacle_footprints(rec.timestamp)
        built: dict[str, OccupancyGrid] = {}
        for n in names:
            cfg = cfgs[n]
            t0 = time.perf_counter()
            grid = build_config_grid(cfg, frame, ctx)
            latency_ms = (time.perf_counter() - t0) * 1e3
            built[n] = grid
            grids[n].append(grid)
            ref = built[cfg.reference]
            fpr = fpr_decompose(grid, ref, ctx.gt_mask(grid, rec.timestamp))
            reports.append(
                FrameReport(
                    config=n,
                    frame=rec.index,
                    occupied_count=grid.occupied_count,
                    inflated_count=grid.inflated_count,
                    iou=iou(grid, ref),
                    detection_rate=detection_rate(grid, obstacles),
                    fpr=fpr.fpr,
                    sensor_invalid_fill=fpr.sensor_invalid_fill,
                    hallucination=fpr.hallucination,
                    inflation_artifact=fpr.inflation_artifact,
                    clearance=clearance(grid),
                    inflation_radius=grid.inflation_radius,
                    scale=frame.scale,
                    fallback=frame.fallback and Sources.D in cfg.sources,
                    update_latency=latency_ms,
                )
            )

    summary = _summarise(names, cfgs, reports, grids)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_frame_reports(out / "frames.csv", reports)
        write_latency(out / "latency.csv", reports)
        write_summary(out / "summary.csv", summary)
    return ReplayResult(reports, summary, grids)


def _summarise(names, cfgs, reports, grids) -> list[dict]:
    by = {n: [r for r in reports if r.config == n] for n in names}
    occ_mean = {n: mean_std(r.occupied_count for r in by[n])[0] for n in names}
    rows = []
    for n in names:
        rs = by[n]
        ref = cfgs[n].reference
        occ_m, occ_s = mean_std(r.occupied_count for r in rs)
        base = occ_mean[ref]
        delta = 100.0 * (occ_m - base) / base if base else (0.0 if occ_m == base else math.inf)
        scales = [r.scale for r in rs if r.scale is not None]
        s_m, s_s = mean_std(scales)
        rows.append(
            {
                "config": n,
                "reference": ref,
                "frames": len(rs),
                "occupied_mean": occ_m,
                "occupied_std": occ_s,
                "delta_pct": delta,
                "inflated_mean": mean_std(r.inflated_count for r in rs)[0],
                "iou_mean": mean_std(r.iou for r in rs)[0],
                "detection_mean": mean_std(r.detection_rate for r in rs)[0],
                "fpr_mean": mean_std(r.fpr for r in rs)[0],
                "sensor_invalid_fill_mean": mean_std(r.sensor_invalid_fill for r in rs)[0],
                "hallucination_mean": mean_std(r.hallucination for r in rs)[0],
                "inflation_artifact_mean": mean_std(r.inflation_artifact for r in rs)[0],
                "clearance_mean": mean_std(r.clearance for r in rs)[0],
                "inflation_radius_mean": mean_std(r.inflation_radius for r in rs)[0],
                "scale_mean": s_m,
                "scale_cv": s_s / s_m if scales and s_m else math.nan,
                "fallback_frames": sum(r.fallback for r in rs),
                "jitter": _sequence_metric(occupancy_jitter, grids[n]),
                "drift": _sequence_metric(centroid_drift, grids[n]),
            }
        )
    return rows


def _cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6g}"
    return str(v)


def write_summary(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([_cell(row[c]) for c in SUMMARY_COLUMNS])


def format_summary(rows) -> str:
    """Human-readable table: occupied mean +- std and change vs reference."""
    lines = [f"{'config':<9}{'occupied':>18}{'delta%':>9}{'IoU':>7}{'det%':>7}{'FPR':>7}{'jitter':>9}{'fallback':>9}"]
    for r in rows:
        det = r["detection_mean"]
        lines.append(
            f"{r['config']:<9}{r['occupied_mean']:>10.1f} +- {r['occupied_std']:<5.1f}{r['delta_pct']:>+9.1f}"
            f"{r['iou_mean']:>7.2f}{(100 * det if det == det else math.nan):>7.0f}{r['fpr_mean']:>7.3f}"
            f"{r['jitter']:>9.4f}{r['fallback_frames']:>9d}"
        )
    return "\n".join(lines)


DEPTH_METHODS = ("learned", "fused", "tof")


def run_depth_eval(bundle_dir, band=(0.3, 1.0), out_dir=None) -> dict:
    """Per-frame accuracy of calibrated learned, fused and raw ToF depth against ground truth.

    Raw ToF is scored on gated pixels only. Frames whose scale estimate is
    rejected, or with no ground truth in ``band``, are skipped and counted.
    """
    b = bundle_dir if isinstance(bundle_dir, bfmt.Bundle) else bfmt.Bundle(bundle_dir)
    ctx = ReplayContext.from_bundle(b)
    fusion = ctx.setup.fusion
    rows = []
    skipped = {m: 0 for m in DEPTH_METHODS}
    unreliable = 0
    for rec in b.frames():
        frame = calibrate(rec, fusion)
        if frame.fallback:
            unreliable += 1
            skipped["learned"] += 1
            skipped["fused"] += 1
            preds = {}
        else:
            fused, _ = fuse_depth(rec.tof, frame.learned_metric, fusion)
            preds = {"learned": (frame.learned_metric, rec.gt), "fused": (fused, rec.gt)}
        gate = tof_gate(rec.tof, fusion)
        preds["tof"] = (rec.tof, DepthFrame(np.where(gate, rec.gt.depth, 0.0)))
        for method in DEPTH_METHODS:
            if method not in preds:
                continue
            pred, gt = preds[method]
            try:
                m = depth_metrics(pred, gt, band)
            except DataError:
                skipped[method] += 1
                continue
            rows.append({"frame": rec.index, "method": method, **_metric_dict(m)})

    summary = {}
    for method in DEPTH_METHODS:
        mine = [r for r in rows if r["method"] == method]
        summary[method] = {
            "frames": len(mine),
            "skipped": skipped[method],
            **{k: mean_std(r[k] for r in mine)[0] for k in ("rmse", "mae", "absrel", "delta_125")},
        }
    result = {"band": tuple(band), "rows": rows, "summary": summary, "unreliable_frames": unreliable}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["frame", "method", "rmse", "mae", "absrel", "delta_125", "count"]
        with open(out / "depth_eval.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([_cell(r[c]) for c in cols])
        with open(out / "depth_summary.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "band_lo", "band_hi", "frames", "skipped", "rmse", "mae", "absrel", "delta_125"])
            for method, s in summary.items():
                w.writerow(
                    [method, _cell(float(band[0])), _cell(float(band[1])), s["frames"], s["skipped"]]
                    + [_cell(s[k]) for k in ("rmse", "mae", "absrel", "delta_125")]
                )
    return result


def _metric_dict(m: DepthMetrics) -> dict:
    return {"rmse": m.rmse, "mae": m.mae, "absrel": m.absrel, "delta_125": m.delta_125, "count": m.count}


def dump_grid(bundle_dir, config: str, k: int, provenance: bool = False) -> str:
    """Costmap text dump for one configuration and frame."""
    b = bundle_dir if isinstance(bundle_dir, bfmt.Bundle) else bfmt.Bundle(bundle_dir)
    ctx = ReplayContext.from_bundle(b)
    cfg = resolve(config)
    frame = calibrate(b.frame(k), ctx.setup.fusion)
    grid = build_config_grid(cfg, frame, ctx)
    return grid.provenance_text() if provenance else grid.to_text()
