"""Parsing, validation, imputation, and normalization of multimodal feature files.

The on-disk format is a manifest (JSON object with ``fps`` and an ordered
``modalities`` array) plus a newline-delimited frame file with one JSON record
per frame:

    {"i": 0, "t": 0.0, "x": [ ... ], "conf": {"face": 0.98, "gaze": 1.0}}

``t`` and ``conf`` are optional; ``x`` concatenates the modality slices in
manifest order. A frame dropped by imputation round-trips with an extra
``"valid": false`` field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import (
    DimensionError,
    InsufficientDataError,
    ManifestError,
    OrderingError,
)

# Standard deviations below this are clamped so normalization never divides
# by (near) zero on frozen dimensions.
STD_FLOOR = 1e-6


@dataclass(frozen=True)
class ModalityLayout:
    """Names, sizes, and vector offsets of the modalities in a feature vector."""

    modalities: tuple[tuple[str, int], ...]
    fps: float

    @property
    def total_dim(self) -> int:
        return sum(dim for _, dim in self.modalities)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.modalities]

    def slices(self) -> dict[str, slice]:
        """Contiguous slice of each modality; slices partition [0, total_dim)."""
        out: dict[str, slice] = {}
        offset = 0
        for name, dim in self.modalities:
            out[name] = slice(offset, offset + dim)
            offset += dim
        return out

    def dim_of(self, name: str) -> int:
        for mod, dim in self.modalities:
            if mod == name:
                return dim
        raise KeyError(name)


@dataclass
class FeatureFrame:
    index: int
    timestamp_s: float
    values: np.ndarray
    valid: bool = True
    confidence: dict[str, float] | None = None


@dataclass
class FeatureStream:
    layout: ModalityLayout
    frames: list[FeatureFrame]
    meta: dict = field(default_factory=dict)

    @property
    def duration_s(self) -> float:
        if not self.frames:
            return 0.0
        return self.frames[-1].timestamp_s + 1.0 / self.layout.fps

    def valid_frames(self) -> list[FeatureFrame]:
        return [f for f in self.frames if f.valid]


@dataclass
class NormStats:
    """Per-dimension mean/std that reproduce a two-pass normalization."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std


@dataclass(frozen=True)
class ImputePolicy:
    """Carry-forward policy: below-threshold modality slices are copied from
    the last confident frame if it is at most ``max_gap_s`` old."""

    threshold: float = 0.5
    max_gap_s: float = 1.0


def parse_manifest(document: str | dict) -> ModalityLayout:
    """Parse and validate a manifest document into a ModalityLayout.

    Raises ManifestError with the offending field path on any schema or
    validation problem.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ManifestError("manifest: expected a JSON object")

    fps = doc.get("fps")
    if not isinstance(fps, (int, float)) or isinstance(fps, bool) or fps <= 0:
        raise ManifestError("manifest.fps: expected a positive number")

    mods = doc.get("modalities")
    if not isinstance(mods, list) or not mods:
        raise ManifestError("manifest.modalities: expected a non-empty array")

    parsed: list[tuple[str, int]] = []
    seen: set[str] = set()
    for i, entry in enumerate(mods):
        path = f"manifest.modalities[{i}]"
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: expected an object")
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise ManifestError(f"{path}.name: expected a non-empty string")
        if name in seen:
            raise ManifestError(f"{path}.name: duplicate modality name {name!r}")
        seen.add(name)
        dim = entry.get("dim")
        if not isinstance(dim, int) or isinstance(dim, bool) or dim <= 0:
            raise ManifestError(f"{path}.dim: expected a positive integer")
        parsed.append((name, dim))

    return ModalityLayout(modalities=tuple(parsed), fps=float(fps))


def serialize_manifest(layout: ModalityLayout) -> str:
    doc = {
        "fps": layout.fps,
        "modalities": [{"name": n, "dim": d} for n, d in layout.modalities],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_frames(lines: Iterable[str] | str, layout: ModalityLayout,
                 meta: dict | None = None) -> FeatureStream:
    """Parse newline-delimited frame records into a FeatureStream.

    Records must arrive in index order, contiguous from 0, with vectors of
    exactly layout.total_dim values. Frames containing non-finite values are
    kept but marked invalid (imputation/scoring skip them).
    """
    if isinstance(lines, str):
        lines = lines.splitlines()

    total = layout.total_dim
    names = set(layout.names)
    frames: list[FeatureFrame] = []
    prev_t = -math.inf
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise OrderingError(f"frame record {len(frames)}: invalid JSON: {exc}") from exc

        idx = rec.get("i")
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise OrderingError(f"frame record {len(frames)}: missing integer index 'i'")
        expected = len(frames)
        if idx != expected:
            kind = "duplicate or out-of-order" if idx < expected else "gap"
            raise OrderingError(f"frame index {idx}: {kind}, expected {expected}")

        x = rec.get("x")
        if not isinstance(x, list):
            raise DimensionError(f"frame {idx}: missing value array 'x'")
        if len(x) != total:
            raise DimensionError(
                f"frame {idx}: vector length {len(x)} != layout total_dim {total}")
        values = np.asarray(x, dtype=np.float64)

        t = rec.get("t")
        if t is None:
            t = idx / layout.fps
        else:
            t = float(t)
            if t < prev_t:
                raise OrderingError(f"frame {idx}: timestamp {t} decreases")
        prev_t = t

        conf = rec.get("conf")
        if conf is not None:
            if not isinstance(conf, dict):
                raise ManifestError(f"frame {idx}.conf: expected an object")
            for key, val in conf.items():
                if key not in names:
                    raise ManifestError(f"frame {idx}.conf: unknown modality {key!r}")
                if not isinstance(val, (int, float)) or not 0.0 <= float(val) <= 1.0:
                    raise ManifestError(f"frame {idx}.conf.{key}: expected a value in [0,1]")
            conf = {k: float(v) for k, v in conf.items()}

        valid = bool(rec.get("valid", True)) and bool(np.isfinite(values).all())
        frames.append(FeatureFrame(index=idx, timestamp_s=t, values=values,
                                   valid=valid, confidence=conf))

    return FeatureStream(layout=layout, frames=frames, meta=dict(meta or {}))


def serialize_frames(stream: FeatureStream) -> str:
    """Render a stream back to newline-delimited records (bit-exact floats)."""
    out: list[str] = []
    for f in stream.frames:
        rec: dict = {"i": f.index, "t": f.timestamp_s, "x": f.values.tolist()}
        if f.confidence is not None:
            rec["conf"] = f.confidence
        if not f.valid:
            rec["valid"] = False
        out.append(json.dumps(rec))
    return "\n".join(out) + ("\n" if out else "")


def impute_missing(stream: FeatureStream, policy: ImputePolicy = ImputePolicy()) -> FeatureStream:
    """Carry low-confidence modality slices forward; invalidate beyond the gap.

    A frame whose modality confidence falls below policy.threshold gets that
    modality's slice copied from the last frame where it was confident,
    provided the gap is at most policy.max_gap_s; otherwise the frame is
    marked invalid. Frames that are confident everywhere are returned as-is.
    """
    slices = stream.layout.slices()
    last_good: dict[str, tuple[float, np.ndarray]] = {}
    out: list[FeatureFrame] = []

    for f in stream.frames:
        if not f.valid:
            out.append(f)
            continue
        conf = f.confidence or {}
        low = [name for name in slices
               if conf.get(name, 1.0) < policy.threshold]

        if not low:
            for name, sl in slices.items():
                last_good[name] = (f.timestamp_s, f.values[sl])
            out.append(f)
            continue

        values = f.values.copy()
        dropped = False
        for name in low:
            prior = last_good.get(name)
            if prior is None or f.timestamp_s - prior[0] > policy.max_gap_s:
                dropped = True
                break
            values[slices[name]] = prior[1]
        if dropped:
            out.append(replace(f, valid=False))
            continue

        for name, sl in slices.items():
            if name not in low:
                last_good[name] = (f.timestamp_s, f.values[sl])
        out.append(replace(f, values=values))

    return FeatureStream(layout=stream.layout, frames=out, meta=dict(stream.meta))


def normalize(stream: FeatureStream, mode: str = "two_pass",
              streaming_rate: float = 0.01) -> tuple[FeatureStream, NormStats]:
    """Z-score the stream per dimension.

    two_pass (default): whole-stream mean and population std over valid
    frames; the returned NormStats reproduce the transform exactly.

    streaming: causal discounted running stats; each frame is transformed with
    the stats accumulated before it, and NormStats hold the final snapshot.

    Stds are clamped to STD_FLOOR so constant dimensions map to 0.
    """
    valid = stream.valid_frames()
    if len(valid) < 2:
        raise InsufficientDataError(
            f"normalization needs >= 2 valid frames, got {len(valid)}")

    if mode == "two_pass":
        matrix = np.stack([f.values for f in valid])
        mean = matrix.mean(axis=0)
        std = np.maximum(matrix.std(axis=0), STD_FLOOR)
        stats = NormStats(mean=mean, std=std)
        frames = [replace(f, values=stats.apply(f.values)) for f in stream.frames]
    elif mode == "streaming":
        d = stream.layout.total_dim
        mean = np.zeros(d)
        var = np.ones(d)
        seen_first = False
        frames = []
        for f in stream.frames:
            std_now = np.maximum(np.sqrt(var), STD_FLOOR)
            frames.append(replace(f, values=(f.values - mean) / std_now))
            if f.valid:
                if not seen_first:
                    mean = f.values.copy()
                    seen_first = True
                else:
                    delta = f.values - mean
                    mean = mean + streaming_rate * delta
                    var = (1.0 - streaming_rate) * var + streaming_rate * (f.values - mean) ** 2
        stats = NormStats(mean=mean, std=np.maximum(np.sqrt(var), STD_FLOOR))
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")

    meta = dict(stream.meta)
    meta["normalized"] = mode
    return FeatureStream(layout=stream.layout, frames=frames, meta=meta), stats
