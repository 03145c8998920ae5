"""Spatial memory of labeled 3D detections with IoU-based merging.

New detections are matched against stored objects of the same label within
a query radius of their centroid (kD-tree lookup); if the best volume IoU
reaches the merge threshold, point clouds are merged, otherwise a new
object is created.  Merging is greedy against the single best neighbor,
so results depend on insertion order (documented behavior).
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

MAX_POINTS_PER_OBJECT = 512


@dataclass(frozen=True)
class Detection:
    label: str
    points: np.ndarray      # (k, 3)
    confidence: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.shape[0] < 1 or not np.all(np.isfinite(pts)):
            raise ValueError("detection needs at least one finite point")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        object.__setattr__(self, "points", pts)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def bbox(self) -> np.ndarray:
        return np.concatenate([self.points.min(axis=0), self.points.max(axis=0)])

    @staticmethod
    def from_box(label: str, center, size, confidence: float) -> "Detection":
        """Detection whose points are the 8 box corners (centroid = center)."""
        c = np.asarray(center, dtype=float)
        h = np.asarray(size, dtype=float) / 2.0
        corners = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
        ) * h + c
        return Detection(label, corners, confidence)


@dataclass(frozen=True)
class MemoryConfig:
    iou_threshold: float = 0.3   # tau
    query_radius: float = 0.05   # m, neighbor lookup around the new centroid

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError("IoU threshold must lie in (0, 1]")
        if self.query_radius <= 0:
            raise ValueError("query radius must be positive")


def iou3d(a, b) -> float:
    """Volume IoU of two AABBs (x1,y1,z1,x2,y2,z2); identical degenerate -> 1."""
    a = np.asarray(a, dtype=float).reshape(6)
    b = np.asarray(b, dtype=float).reshape(6)
    if np.any(a[:3] > a[3:] + 1e-15) or np.any(b[:3] > b[3:] + 1e-15):
        raise ValueError("box min must not exceed box max")
    if np.allclose(a, b) and np.prod(a[3:] - a[:3]) == 0.0:
        return 1.0
    lo = np.maximum(a[:3], b[:3])
    hi = np.minimum(a[3:], b[3:])
    inter = float(np.prod(np.maximum(hi - lo, 0.0)))
    va = float(np.prod(a[3:] - a[:3]))
    vb = float(np.prod(b[3:] - b[:3]))
    union = va + vb - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass
class StoredObject:
    object_id: int
    label: str
    points: np.ndarray
    confidence: float

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def bbox(self) -> np.ndarray:
        return np.concatenate([self.points.min(axis=0), self.points.max(axis=0)])


class DetectionMemory:
    """Single-writer / multi-reader store; kD-tree over object centroids."""

    def __init__(self, config: MemoryConfig | None = None):
        self.config = config or MemoryConfig()
        self._objects: dict[int, StoredObject] = {}
        self._next_id = 0
        self._tree = None
        self._tree_ids: list[int] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._objects)

    def _rebuild_tree(self):
        # delete + reinsert semantics: the tree is rebuilt after any key change
        self._tree_ids = sorted(self._objects)
        if self._tree_ids:
            pts = np.array([self._objects[i].centroid for i in self._tree_ids])
            self._tree = cKDTree(pts)
        else:
            self._tree = None

    def _neighbors(self, centroid: np.ndarray) -> list:
        if self._tree is None:
            return []
        idx = self._tree.query_ball_point(centroid, self.config.query_radius)
        return [self._tree_ids[i] for i in idx]

    def insert(self, det: Detection) -> tuple:
        """Insert or merge; returns ("merged" | "added", object_id)."""
        with self._lock:
            best_id, best_iou = None, 0.0
            for oid in self._neighbors(det.centroid):
                obj = self._objects[oid]
                if obj.label != det.label:
                    continue
                v = iou3d(obj.bbox, det.bbox)
                if v > best_iou or (v == best_iou and best_id is not None and oid < best_id):
                    best_id, best_iou = oid, v
            if best_id is not None and best_iou >= self.config.iou_threshold:
                obj = self._objects[best_id]
                pts = np.vstack([obj.points, det.points])
                if pts.shape[0] > MAX_POINTS_PER_OBJECT:
                    keep = np.linspace(0, pts.shape[0] - 1, MAX_POINTS_PER_OBJECT).astype(int)
                    pts = pts[keep]
                obj.points = pts
                obj.confidence = max(obj.confidence, det.confidence)
                self._rebuild_tree()
                return ("merged", best_id)
            oid = self._next_id
            self._next_id += 1
            self._objects[oid] = StoredObject(oid, det.label, det.points.copy(), det.confidence)
            self._rebuild_tree()
            return ("added", oid)

    def query_all(self) -> list:
        """Snapshot of stored objects ordered by object id."""
        return [self._objects[i] for i in sorted(self._objects)]

    def query_by_label(self, label: str) -> list:
        return [o for o in self.query_all() if o.label == label]

    def nearest(self, point) -> StoredObject | None:
        if self._tree is None:
            return None
        _, i = self._tree.query(np.asarray(point, dtype=float))
        return self._objects[self._tree_ids[int(i)]]

    def to_json(self) -> dict:
        return {
            "objects": [
                {
                    "id": o.object_id,
                    "label": o.label,
                    "centroid": [float(v) for v in o.centroid],
                    "bbox": [float(v) for v in o.bbox],
                    "confidence": float(o.confidence),
                    "point_count": int(o.points.shape[0]),
                }
                for o in self.query_all()
            ]
        }


@dataclass(frozen=True)
class DetectorRates:
    recall: float = 0.97
    fp_fraction: float = 0.08
    position_sigma: float = 0.002   # m, isotropic centroid noise

    def __post_init__(self):
        if not 0.0 <= self.recall <= 1.0:
            raise ValueError("recall must lie in [0, 1]")
        if self.fp_fraction < 0 or self.position_sigma < 0:
            raise ValueError("rates must be nonnegative")


def simulate_detections(ground_truth: list, rates: DetectorRates, rng_seed: int,
                        workspace_bounds=((-1.0, -0.6, 0.2), (1.0, 0.6, 0.5))) -> list:
    """Noisy detection batch from ground truth (label, center, size) triples.

    Each true item is emitted with probability `recall`, centroid perturbed
    with isotropic Gaussian noise; each emitted item additionally spawns a
    false positive with probability `fp_fraction`, placed uniformly in the
    workspace with a label drawn from the true vocabulary.
    """
    rng = np.random.default_rng(rng_seed)
    labels = sorted({g[0] for g in ground_truth}) or ["unknown"]
    lo = np.asarray(workspace_bounds[0], dtype=float)
    hi = np.asarray(workspace_bounds[1], dtype=float)
    out = []
    n_emitted = 0
    for label, center, size in ground_truth:
        if rng.random() > rates.recall:
            continue
        n_emitted += 1
        noisy = np.asarray(center, dtype=float) + rng.normal(0.0, rates.position_sigma, 3)
        conf = float(min(max(rng.uniform(0.5, 0.99), 1e-6), 1 - 1e-6))
        out.append(Detection.from_box(label, noisy, size, conf))
    for _ in range(n_emitted):
        if rng.random() < rates.fp_fraction:
            pos = rng.uniform(lo, hi)
            label = labels[rng.integers(len(labels))]
            out.append(Detection.from_box(label, pos, (0.02, 0.02, 0.02),
                                          float(rng.uniform(0.3, 0.9))))
    return out
