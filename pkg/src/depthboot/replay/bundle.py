"""On-disk sequence bundles.

Layout::

    manifest.json          camera, grid, configs, poses, timestamps, scene
    frames/%06d.dfb        three DFB1 records: ToF, learned (relative), ground truth
    lidar/%06d.dls         one DLS1 record

DFB1 (little-endian): magic, u32 width, u32 height, u8 channel bitmask
(bit0 depth f32, bit1 confidence f32, bit2 label u8), then each present
channel row-major in bit order. DLS1: magic, f32 angle_min,
f32 angle_increment, f32 scan_height, f32 range_max, u32 count, f32 ranges
with NaN for no return.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..frames import DepthFrame, LidarScan
from ..geometry import CameraModel

DFB_MAGIC = b"DFB1"
DLS_MAGIC = b"DLS1"
CH_DEPTH, CH_CONF, CH_LABEL = 1, 2, 4
FORMAT_VERSION = 1

_DFB_HEADER = struct.Struct("<4sIIB")
_DLS_HEADER = struct.Struct("<4sffffI")


def encode_dfb(depth=None, confidence=None, labels=None) -> bytes:
    arrays = [a for a in (depth, confidence, labels) if a is not None]
    if not arrays:
        raise DataError("DFB record needs at least one channel")
    h, w = np.shape(arrays[0])
    mask = 0
    body = []
    for bit, arr, dtype in ((CH_DEPTH, depth, "<f4"), (CH_CONF, confidence, "<f4"), (CH_LABEL, labels, "u1")):
        if arr is None:
            continue
        arr = np.asarray(arr)
        if arr.shape != (h, w):
            raise DataError(f"channel shape {arr.shape} != {(h, w)}")
        mask |= bit
        body.append(np.ascontiguousarray(arr, dtype=dtype).tobytes())
    return _DFB_HEADER.pack(DFB_MAGIC, w, h, mask) + b"".join(body)


def decode_dfb(stream: io.BufferedIOBase) -> dict[str, np.ndarray]:
    """Read one DFB1 record; returns the present channels by name."""
    head = stream.read(_DFB_HEADER.size)
    if len(head) != _DFB_HEADER.size:
        raise DataError("truncated DFB header")
    magic, w, h, mask = _DFB_HEADER.unpack(head)
    if magic != DFB_MAGIC:
        raise DataError(f"bad DFB magic {magic!r}")
    if mask == 0 or mask & ~(CH_DEPTH | CH_CONF | CH_LABEL):
        raise DataError(f"bad DFB channel mask {mask:#x}")
    out = {}
    for bit, name, dtype, size in ((CH_DEPTH, "depth", "<f4", 4), (CH_CONF, "confidence", "<f4", 4), (CH_LABEL, "labels", "u1", 1)):
        if not mask & bit:
            continue
        raw = stream.read(w * h * size)
        if len(raw) != w * h * size:
            raise DataError(f"truncated DFB {name} channel")
        out[name] = np.frombuffer(raw, dtype=dtype).reshape(h, w).copy()
    return out


def encode_dls(scan: LidarScan) -> bytes:
    ranges = np.asarray(scan.ranges, dtype="<f4")
    head = _DLS_HEADER.pack(
        DLS_MAGIC, scan.angle_min, scan.angle_increment, scan.scan_height, scan.range_max, ranges.size
    )
    return head + ranges.tobytes()


def decode_dls(data: bytes, timestamp: float = 0.0) -> LidarScan:
    if len(data) < _DLS_HEADER.size:
        raise DataError("truncated DLS header")
    magic, amin, ainc, height, rmax, n = _DLS_HEADER.unpack_from(data)
    if magic != DLS_MAGIC:
        raise DataError(f"bad DLS magic {magic!r}")
    body = data[_DLS_HEADER.size :]
    if len(body) != 4 * n:
        raise DataError(f"DLS record holds {len(body)} bytes for {n} ranges")
    ranges = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return LidarScan(float(amin), float(ainc), ranges, float(height), float(rmax), timestamp)


@dataclass
class FrameRecord:
    index: int
    pose: tuple[float, float, float]
    timestamp: float
    tof: DepthFrame
    learned: DepthFrame
    gt: DepthFrame
    labels: np.ndarray
    scan: LidarScan


def frame_path(root: Path, k: int) -> Path:
    return Path(root) / "frames" / f"{k:06d}.dfb"


def lidar_path(root: Path, k: int) -> Path:
    return Path(root) / "lidar" / f"{k:06d}.dls"


def write_frame(root: Path, k: int, tof: DepthFrame, learned: DepthFrame, gt: DepthFrame, labels, scan: LidarScan):
    data = (
        encode_dfb(tof.depth, tof.confidence)
        + encode_dfb(learned.depth, learned.confidence)
        + encode_dfb(gt.depth, labels=labels)
    )
    frame_path(root, k).write_bytes(data)
    lidar_path(root, k).write_bytes(encode_dls(scan))


def write_manifest(root: Path, manifest: dict) -> None:
    text = json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False)
    (Path(root) / "manifest.json").write_text(text + "\n", encoding="utf-8")


class Bundle:
    """Read access to a bundle directory."""

    def __init__(self, root):
        self.root = Path(root)
        mpath = self.root / "manifest.json"
        if not mpath.is_file():
            raise DataError(f"{self.root} has no manifest.json")
        try:
            self.manifest = json.loads(mpath.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest.json: {exc}") from None
        try:
            self.camera = CameraModel.from_dict(self.manifest["camera"])
            self.frame_count = int(self.manifest["frame_count"])
            self.poses = [tuple(float(v) for v in p) for p in self.manifest["poses"]]
            self.timestamps = [float(t) for t in self.manifest["timestamps"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"manifest.json is missing or has a bad field: {exc}") from None
        if len(self.poses) != self.frame_count or len(self.timestamps) != self.frame_count:
            raise DataError("manifest pose/timestamp count differs from frame_count")
        for k in range(self.frame_count):
            if not frame_path(self.root, k).is_file() or not lidar_path(self.root, k).is_file():
                raise DataError(f"bundle is missing records for frame {k}")

    def __len__(self) -> int:
        return self.frame_count

    def frame(self, k: int) -> FrameRecord:
        if not 0 <= k < self.frame_count:
            raise DataError(f"frame {k} out of range [0, {self.frame_count})")
        t = self.timestamps[k]
        with open(frame_path(self.root, k), "rb") as fh:
            tof = decode_dfb(fh)
            learned = decode_dfb(fh)
            gt = decode_dfb(fh)
            if fh.read(1):
                raise DataError(f"trailing bytes in frame {k}")
        shape = (self.camera.height, self.camera.width)
        for rec, need in ((tof, ("depth", "confidence")), (learned, ("depth", "confidence")), (gt, ("depth", "labels"))):
            if any(n not in rec for n in need):
                raise DataError(f"frame {k} record lacks one of {need}")
            if any(a.shape != shape for a in rec.values()):
                raise DataError(f"frame {k} dimensions differ from the camera model {shape}")
        scan = decode_dls(lidar_path(self.root, k).read_bytes(), t)
        return FrameRecord(
            k,
            self.poses[k],
            t,
            DepthFrame(tof["depth"].astype(np.float64), tof["confidence"].astype(np.float64), t),
            DepthFrame(learned["depth"].astype(np.float64), learned["confidence"].astype(np.float64), t),
            DepthFrame(gt["depth"].astype(np.float64), None, t),
            gt["labels"],
            scan,
        )

    def frames(self):
        for k in range(self.frame_count):
            yield self.frame(k)
