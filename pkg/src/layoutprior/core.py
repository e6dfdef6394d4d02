"""Domain types, geometry primitives, and the matrix exchange model.

All coordinates are pixels with a top-left origin and y increasing
downward. Matrices are 2-D float64 numpy arrays exchanged on disk as
MTX-JSON: ``{"rows": R, "cols": C, "data": [...]}`` in row-major order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Library-wide comparison tolerance.
TOL = 1e-9


class LayoutPriorError(Exception):
    """Base class for all library errors."""


class ParseError(LayoutPriorError):
    """Malformed or inconsistent input data."""


class ShapeError(LayoutPriorError):
    """Matrix dimension mismatch."""


@dataclass(frozen=True)
class ClassVocabulary:
    names: tuple

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 1:
            raise ParseError("vocabulary must contain at least one class")
        if len(set(names)) != len(names):
            raise ParseError("vocabulary class names must be unique")
        if any(not n for n in names):
            raise ParseError("vocabulary class names must be non-empty")

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ParseError(f"unknown class name: {name!r}") from None


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ParseError(
                f"malformed box ({self.x1},{self.y1},{self.x2},{self.y2}): "
                "x2 < x1 or y2 < y1"
            )

    def center(self):
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def clamped(self, width: float, height: float) -> "BBox":
        return BBox(
            min(max(self.x1, 0.0), width),
            min(max(self.y1, 0.0), height),
            min(max(self.x2, 0.0), width),
            min(max(self.y2, 0.0), height),
        )


@dataclass(frozen=True)
class Component:
    bbox: BBox
    class_id: int
    score: Optional[float] = None


@dataclass(frozen=True)
class LayoutDocument:
    id: str
    width: float
    height: float
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.width <= 0 or self.height <= 0:
            raise ParseError(f"layout {self.id!r}: non-positive canvas size")


@dataclass(frozen=True)
class ProposalBatch:
    """N_r candidate boxes with class logits and optional features."""

    boxes: tuple
    logits: np.ndarray
    layout_height: float
    features: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        logits = np.asarray(self.logits, dtype=np.float64)
        object.__setattr__(self, "logits", logits)
        if logits.ndim != 2 or logits.shape[0] != len(self.boxes):
            raise ShapeError(
                f"logits shape {logits.shape} does not match {len(self.boxes)} boxes"
            )
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != len(self.boxes):
                raise ShapeError(
                    f"features shape {feats.shape} does not match "
                    f"{len(self.boxes)} boxes"
                )
            object.__setattr__(self, "features", feats)
        if self.layout_height <= 0:
            raise ParseError("layout_height must be positive")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when the union has zero area."""
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    union = a.area() + b.area() - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def row_softmax(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's max."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"row_softmax expects a 2-D matrix, got shape {m.shape}")
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"MTX-JSON stores 2-D matrices only, got shape {m.shape}")
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
            "data": [float(v) for v in m.ravel()]}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"bad MTX-JSON object: {e}") from None
    if len(data) != rows * cols:
        raise ParseError(
            f"MTX-JSON data length {len(data)} != rows*cols {rows * cols}"
        )
    m = np.asarray(data, dtype=np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(m)):
        raise ParseError("MTX-JSON entries must be finite")
    return m


def save_matrix(m: np.ndarray, path) -> None:
    with open(path, "w") as f:
        json.dump(matrix_to_json(m), f)


def load_matrix(path) -> np.ndarray:
    with open(path) as f:
        return matrix_from_json(json.load(f))
