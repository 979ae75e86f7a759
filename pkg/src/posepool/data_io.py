"""File formats, dataset directories and the synthetic benchmark generator.

Dataset layout (one flat directory)::

    <video_id>.pose.csv    frame,yaw_deg,pitch_deg,roll_deg
    <video_id>.feat.bin    PSMP | u32 version | u32 m | u32 d | m*d float32 (little-endian)
    pairs.csv              pair_id,video_a,video_b,label   (1 = same, 0 = different)
    manifest.json          written by the generator only

``<video_id>.feat.csv`` (header ``frame,f0,...,f{d-1}``) may replace the
binary feature file for small fixtures with d <= 64.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import struct
import tempfile
from collections.abc import Mapping
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DataValidationError, InvalidArgumentError
from .pose_select import PoseSet, SelectionMask
from .similarity import FeatureBag, normalize_rows
from .verify import PairRecord, RocCurve, ScoreRecord, SweepRow

log = logging.getLogger(__name__)

POSE_HEADER = ["frame", "yaw_deg", "pitch_deg", "roll_deg"]
PAIRS_HEADER = ["pair_id", "video_a", "video_b", "label"]
SCORES_HEADER = ["pair_id", "similarity", "k_a", "k_b", "correlations"]
ROC_HEADER = ["fpr", "tpr"]
SWEEP_HEADER = ["k", "auc", "mean_correlations"]
FEAT_MAGIC = b"PSMP"
FEAT_VERSION = 1
FEAT_HEADER = struct.Struct("<4sIII")
FEAT_CSV_MAX_DIM = 64
POSE_SUFFIX = ".pose.csv"
FEAT_SUFFIXES = (".feat.bin", ".feat.csv")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, data) -> None:
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_csv(path, header):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise DataValidationError(f"{path}: empty file")
        if [c.strip() for c in first] != header:
            raise DataValidationError(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
        for lineno, row in enumerate(reader, start=2):
            if row:
                yield lineno, row


def video_id_from_path(path) -> str:
    name = Path(path).name
    for suffix in (POSE_SUFFIX,) + FEAT_SUFFIXES:
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


# -- poses -------------------------------------------------------------------


def read_poses(path, video_id: str | None = None) -> PoseSet:
    path = Path(path)
    rows = []
    for lineno, row in _read_csv(path, POSE_HEADER):
        if len(row) != 4:
            raise DataValidationError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        try:
            frame = int(row[0])
            angles = [float(v) for v in row[1:]]
        except ValueError:
            raise DataValidationError(f"{path}:{lineno}: unparseable value in {row}") from None
        if frame != len(rows):
            raise DataValidationError(f"{path}:{lineno}: expected frame {len(rows)}, got {frame}")
        if not all(math.isfinite(a) for a in angles):
            raise DataValidationError(f"{path}:{lineno}: non-finite pose at frame {frame}")
        rows.append(angles)
    if not rows:
        raise DataValidationError(f"{path}: no pose rows")
    poses = PoseSet(video_id or video_id_from_path(path), np.array(rows))
    bad = poses.out_of_range()
    if bad:
        log.warning("%s: %d poses outside [-180, 180] deg (frames %s)", path, len(bad), bad[:10])
    return poses


def write_poses(path, poses: PoseSet) -> None:
    rows = ([i] + [_fmt(a) for a in p] for i, p in enumerate(poses.poses))
    atomic_write(path, _csv_text(POSE_HEADER, rows))


# -- features ------------------------------------------------------------------


def read_features(path) -> np.ndarray:
    """Raw ``(m, d)`` float32 features from a ``.bin`` or ``.csv`` file."""
    path = Path(path)
    if path.suffix == ".csv":
        return _read_features_csv(path)
    blob = path.read_bytes()
    if len(blob) < FEAT_HEADER.size:
        raise DataValidationError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, m, d = FEAT_HEADER.unpack_from(blob)
    if magic != FEAT_MAGIC:
        raise DataValidationError(f"{path}: bad magic {magic!r}, expected {FEAT_MAGIC!r}")
    if version != FEAT_VERSION:
        raise DataValidationError(f"{path}: unsupported version {version}")
    if m == 0 or d == 0:
        raise DataValidationError(f"{path}: empty feature file (m={m}, d={d})")
    expected = FEAT_HEADER.size + 4 * m * d
    if len(blob) != expected:
        raise DataValidationError(f"{path}: expected {expected} bytes for m={m}, d={d}, got {len(blob)}")
    feats = np.frombuffer(blob, dtype="<f4", offset=FEAT_HEADER.size).reshape(m, d)
    bad = ~np.isfinite(feats)
    if bad.any():
        flat = int(np.flatnonzero(bad)[0])
        offset = FEAT_HEADER.size + 4 * flat
        raise DataValidationError(f"{path}: non-finite value at frame {flat // d} (byte offset {offset})")
    return feats.astype(np.float32)


def _read_features_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header or header[0] != "frame":
        raise DataValidationError(f"{path}: feature CSV must start with a 'frame' column")
    d = len(header) - 1
    if d < 1 or d > FEAT_CSV_MAX_DIM or header[1:] != [f"f{i}" for i in range(d)]:
        raise DataValidationError(f"{path}: header must be frame,f0,...,f{{d-1}} with 1 <= d <= {FEAT_CSV_MAX_DIM}")
    rows = []
    for lineno, row in _read_csv(path, header):
        try:
            frame, vals = int(row[0]), [float(v) for v in row[1:]]
        except ValueError:
            raise DataValidationError(f"{path}:{lineno}: unparseable value") from None
        if frame != len(rows) or len(vals) != d:
            raise DataValidationError(f"{path}:{lineno}: bad frame index or column count")
        if not all(math.isfinite(v) for v in vals):
            raise DataValidationError(f"{path}:{lineno}: non-finite feature value")
        rows.append(vals)
    if not rows:
        raise DataValidationError(f"{path}: no feature rows")
    return np.array(rows, dtype=np.float32)


def features_to_bytes(features) -> bytes:
    feats = np.ascontiguousarray(features, dtype="<f4")
    if feats.ndim != 2:
        raise InvalidArgumentError(f"features must be 2-D, got shape {feats.shape}")
    m, d = feats.shape
    return FEAT_HEADER.pack(FEAT_MAGIC, FEAT_VERSION, m, d) + feats.tobytes()


def write_features(path, features) -> None:
    path = Path(path)
    feats = np.asarray(features, dtype=np.float32)
    if path.suffix == ".csv":
        d = feats.shape[1]
        if d > FEAT_CSV_MAX_DIM:
            raise InvalidArgumentError(f"CSV features limited to d <= {FEAT_CSV_MAX_DIM}")
        rows = ([i] + [_fmt(v) for v in row] for i, row in enumerate(feats))
        atomic_write(path, _csv_text(["frame"] + [f"f{i}" for i in range(d)], rows))
    else:
        atomic_write(path, features_to_bytes(feats))


def _feature_count(path) -> int:
    path = Path(path)
    if path.suffix == ".csv":
        return read_features(path).shape[0]
    with open(path, "rb") as fh:
        head = fh.read(FEAT_HEADER.size)
    if len(head) < FEAT_HEADER.size or head[:4] != FEAT_MAGIC:
        raise DataValidationError(f"{path}: not a PSMP feature file")
    return FEAT_HEADER.unpack(head)[2]


def load_video(pose_path, feature_path, video_id: str | None = None) -> tuple[PoseSet, FeatureBag]:
    """Load a video's poses and features; features are normalized here."""
    vid = video_id or video_id_from_path(pose_path)
    poses = read_poses(pose_path, vid)
    raw = read_features(feature_path)
    if raw.shape[0] != poses.m:
        raise DataValidationError(
            f"{vid}: {poses.m} poses in {pose_path} but {raw.shape[0]} features in {feature_path}"
        )
    try:
        bag = FeatureBag(vid, normalize_rows(raw))
    except DataValidationError as exc:
        raise DataValidationError(f"{feature_path}: {exc}") from None
    return poses, bag


class DatasetIndex(Mapping):
    """Lazy ``video_id -> (PoseSet, FeatureBag)`` view of a dataset directory."""

    def __init__(self, root, entries: dict[str, tuple[Path, Path]], counts: dict[str, int]):
        self.root = Path(root)
        self.entries = entries
        self.counts = counts

    @classmethod
    def open(cls, root) -> "DatasetIndex":
        root = Path(root)
        if not root.is_dir():
            raise FileNotFoundError(f"dataset directory not found: {root}")
        entries, counts = {}, {}
        for pose_path in sorted(root.glob("*" + POSE_SUFFIX)):
            vid = video_id_from_path(pose_path)
            feat = next((root / (vid + s) for s in FEAT_SUFFIXES if (root / (vid + s)).exists()), None)
            if feat is None:
                raise DataValidationError(f"{root}: video {vid!r} has poses but no feature file")
            n_feat = _feature_count(feat)
            with open(pose_path, encoding="utf-8") as fh:
                n_pose = sum(1 for line in fh if line.strip()) - 1
            if n_feat != n_pose:
                raise DataValidationError(f"{vid}: {n_pose} pose rows but {n_feat} feature rows")
            entries[vid] = (pose_path, feat)
            counts[vid] = n_pose
        return cls(root, entries, counts)

    def __getitem__(self, video_id):
        pose_path, feat_path = self.entries[video_id]
        return load_video(pose_path, feat_path, video_id)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def preload(self) -> dict:
        return {vid: self[vid] for vid in self}


# -- pairs, scores, ROC, masks ---------------------------------------------------


def read_pairs(path) -> list[PairRecord]:
    pairs = []
    for lineno, row in _read_csv(path, PAIRS_HEADER):
        if len(row) != 4 or row[3].strip() not in ("0", "1"):
            raise DataValidationError(f"{path}:{lineno}: expected pair_id,video_a,video_b,0|1")
        try:
            pid = int(row[0])
        except ValueError:
            raise DataValidationError(f"{path}:{lineno}: bad pair id {row[0]!r}") from None
        pairs.append(PairRecord(pid, row[1].strip(), row[2].strip(), row[3].strip() == "1"))
    ids = [p.pair_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise DataValidationError(f"{path}: duplicate pair ids")
    return pairs


def write_pairs(path, pairs) -> None:
    rows = ([p.pair_id, p.video_a, p.video_b, int(p.same)] for p in pairs)
    atomic_write(path, _csv_text(PAIRS_HEADER, rows))


def scores_text(records) -> str:
    rows = ([r.pair_id, _fmt(r.similarity), r.k_a, r.k_b, r.correlations_computed] for r in records)
    return _csv_text(SCORES_HEADER, rows)


def write_scores(path, records) -> None:
    atomic_write(path, scores_text(records))


def read_scores(path, pooling: str = "max") -> list[ScoreRecord]:
    out = []
    for lineno, row in _read_csv(path, SCORES_HEADER):
        try:
            out.append(ScoreRecord(int(row[0]), float(row[1]), pooling, int(row[2]), int(row[3])))
        except (ValueError, IndexError):
            raise DataValidationError(f"{path}:{lineno}: malformed score row") from None
    return out


def write_roc(path, roc: RocCurve, pairs: int, pooling: str, k_spec: str) -> Path:
    """Write ``fpr,tpr`` CSV plus a JSON sidecar; returns the sidecar path."""
    path = Path(path)
    rows = ([_fmt(f), _fmt(t)] for f, t in roc.points)
    sidecar = path.with_suffix(".json")
    meta = {"auc": roc.auc, "pairs": pairs, "pooling": pooling, "k_spec": str(k_spec)}
    atomic_write(path, _csv_text(ROC_HEADER, rows))
    atomic_write(sidecar, json.dumps(meta, indent=2) + "\n")
    return sidecar


def write_sweep(path, rows: list[SweepRow]) -> None:
    atomic_write(path, _csv_text(SWEEP_HEADER, ([r.k, _fmt(r.auc), _fmt(r.mean_correlations)] for r in rows)))


def write_mask(path, mask: SelectionMask) -> None:
    atomic_write(path, json.dumps(mask.to_dict(), indent=2) + "\n")


def read_mask(path) -> SelectionMask:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: invalid JSON ({exc})") from None
    return SelectionMask.from_dict(data)


# -- synthetic benchmark ---------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings; ``pose_weight`` and ``noise_sigma`` mix pose and noise into features."""

    num_identities: int = 50
    videos_per_identity: int = 2
    frames_per_video: int = 100
    dim: int = 128
    pose_weight: float = 0.5
    noise_sigma: float = 0.3
    pose_clusters_per_video: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("num_identities", "videos_per_identity", "frames_per_video", "dim", "pose_clusters_per_video"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise InvalidArgumentError(f"{name} must be an integer >= 1, got {v!r}")
        for name in ("pose_weight", "noise_sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidArgumentError(f"{name} must be finite and >= 0, got {v!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidArgumentError(f"seed must be a non-negative integer, got {self.seed!r}")


POSE_CLUSTER_STD_DEG = 3.0
YAW_RANGE_DEG = 45.0
PITCH_ROLL_RANGE_DEG = 20.0


def pose_embedding(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``3 x dim`` map with unit spectral norm (applied to radians)."""
    g = rng.standard_normal((3, dim))
    return g / np.linalg.norm(g, 2)


def synth_video(z, g, config: SynthConfig, rng: np.random.Generator):
    """Poses (deg) and raw features for one video of identity vector ``z``."""
    n, c = config.frames_per_video, config.pose_clusters_per_video
    centers = np.column_stack([
        rng.uniform(-YAW_RANGE_DEG, YAW_RANGE_DEG, c),
        rng.uniform(-PITCH_ROLL_RANGE_DEG, PITCH_ROLL_RANGE_DEG, (c, 2)),
    ])
    poses = centers[rng.integers(c, size=n)] + POSE_CLUSTER_STD_DEG * rng.standard_normal((n, 3))
    noise = rng.standard_normal((n, config.dim))
    feats = z + config.pose_weight * np.deg2rad(poses) @ g + config.noise_sigma * noise
    return poses, feats


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def generate_synthetic(config: SynthConfig, out_dir) -> dict:
    """Write a synthetic dataset to ``out_dir`` and return its manifest.

    Each identity gets a random unit vector ``z``; each frame feature is
    ``z + pose_weight * g(pose) + noise_sigma * eps`` with ``eps`` standard
    normal in every coordinate, and is stored unit-normalized as float32.
    Pairs are every same-identity video pair plus as many random
    different-identity pairs.  Output bytes depend only on ``config``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory is not writable: {out}")

    if config.videos_per_identity > 1 and config.num_identities < 2:
        raise InvalidArgumentError("need at least two identities to draw different-identity pairs")

    rng = np.random.default_rng(config.seed)
    g = pose_embedding(config.dim, rng)
    identities = {}
    written = []
    for i in range(config.num_identities):
        z = rng.standard_normal(config.dim)
        z /= np.linalg.norm(z)
        for v in range(config.videos_per_identity):
            vid = f"id{i:04d}_v{v:02d}"
            poses, feats = synth_video(z, g, config, rng)
            pose_path, feat_path = out / f"{vid}{POSE_SUFFIX}", out / f"{vid}.feat.bin"
            write_poses(pose_path, PoseSet(vid, poses))
            write_features(feat_path, normalize_rows(feats))
            written += [pose_path, feat_path]
            identities[vid] = i

    by_identity = {}
    for vid, ident in identities.items():
        by_identity.setdefault(ident, []).append(vid)
    same = [(a, b) for vids in by_identity.values() for a, b in itertools.combinations(vids, 2)]
    different = _different_pairs(by_identity, len(same), rng)
    pairs = [PairRecord(n + 1, a, b, True) for n, (a, b) in enumerate(same)]
    pairs += [PairRecord(len(same) + n + 1, a, b, False) for n, (a, b) in enumerate(different)]
    pairs_path = out / "pairs.csv"
    write_pairs(pairs_path, pairs)
    written.append(pairs_path)

    manifest = {
        "config": asdict(config),
        "seed": config.seed,
        "files": [{"path": p.name, "sha256": _sha256(p)} for p in written],
        "identities": identities,
    }
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _different_pairs(by_identity, count, rng):
    ids = sorted(by_identity)
    if count == 0:
        return []
    if len(ids) < 2:
        raise InvalidArgumentError("need at least two identities to draw different-identity pairs")
    possible = sum(len(by_identity[a]) * len(by_identity[b]) for a, b in itertools.combinations(ids, 2))
    if count > possible:
        raise InvalidArgumentError(f"cannot draw {count} distinct different-identity pairs")
    seen, out = set(), []
    while len(out) < count:
        ia, ib = rng.choice(len(ids), size=2, replace=False)
        va = by_identity[ids[ia]][rng.integers(len(by_identity[ids[ia]]))]
        vb = by_identity[ids[ib]][rng.integers(len(by_identity[ids[ib]]))]
        key = frozenset((va, vb))
        if key not in seen:
            seen.add(key)
            out.append((va, vb))
    return out
