import json

import numpy as np
import pytest

from scenesift.ingest import ModalityLayout, parse_frames, parse_manifest


@pytest.fixture
def default_layout() -> ModalityLayout:
    return parse_manifest(json.dumps({
        "fps": 30,
        "modalities": [
            {"name": "face", "dim": 136},
            {"name": "body", "dim": 34},
            {"name": "head", "dim": 3},
            {"name": "gaze", "dim": 2},
        ],
    }))


@pytest.fixture
def small_layout() -> ModalityLayout:
    return parse_manifest({
        "fps": 10,
        "modalities": [
            {"name": "a", "dim": 2},
            {"name": "b", "dim": 3},
        ],
    })


def make_stream(layout: ModalityLayout, values: np.ndarray, conf=None, meta=None):
    """Build a stream through the real parser so tests exercise the wire path."""
    lines = []
    for i, row in enumerate(np.asarray(values, dtype=float)):
        rec = {"i": i, "x": list(row)}
        if conf is not None and conf[i] is not None:
            rec["conf"] = conf[i]
        lines.append(json.dumps(rec))
    return parse_frames("\n".join(lines), layout, meta=meta)
