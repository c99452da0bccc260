"""Top-K scene selection and canonical report rendering.

A scene is one scored window: no merging of adjacent windows. Reports render
to a canonical JSON form — fixed key order, scene metrics at 6 fractional
digits, importances rounded with largest-remainder so the displayed
percentages always sum to exactly 100 — making render → parse → render a
byte-level fixpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import __version__
from .errors import EmptyReportError, ParameterError
from .scoring import ScoreSeries

GENERATOR = f"scenesift {__version__}"

DARK_TIER_MAX_RANK = 3


@dataclass
class Scene:
    rank: int
    start_s: float
    end_s: float
    outlierness: float
    tier: str
    representative_frame: int
    top_modality: str | None
    importances: dict[str, float]
    degenerate_attribution: bool = False


@dataclass
class SceneReport:
    session: str
    k: int
    window_s: float
    scenes: list[Scene] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    generator: str = GENERATOR


def select_top_k(series: ScoreSeries, k: int) -> SceneReport:
    """Rank the scored windows by outlierness and keep the top k.

    Ties break toward the earlier window. Ranks 1-3 get the dark pin tier,
    everything after the light tier. Fewer scored windows than k yields a
    shorter report.
    """
    if k <= 0:
        raise ParameterError(f"k must be positive, got {k}")
    scored = series.scored_windows()
    if not scored:
        raise EmptyReportError("series contains no scored windows")

    ordered = sorted(scored, key=lambda w: (-w.outlierness, w.start_s))
    scenes = []
    for rank, w in enumerate(ordered[:k], start=1):
        top = None
        if not w.degenerate_attribution:
            best = -math.inf
            for name, val in w.importances.items():  # layout order; first wins ties
                if val > best:
                    best = val
                    top = name
        scenes.append(Scene(
            rank=rank,
            start_s=w.start_s,
            end_s=w.end_s,
            outlierness=w.outlierness,
            tier="dark" if rank <= DARK_TIER_MAX_RANK else "light",
            representative_frame=w.representative_frame,
            top_modality=top,
            importances=dict(w.importances),
            degenerate_attribution=w.degenerate_attribution,
        ))

    return SceneReport(session=series.session, k=k, window_s=series.window_s,
                       scenes=scenes, config=dict(series.config))


def largest_remainder(values: dict[str, float], total: float = 100.0,
                      decimals: int = 6) -> dict[str, float]:
    """Round to fixed decimals while preserving the exact total.

    Each value is floored at the target precision; the leftover units go to
    the entries with the largest fractional remainders (earlier entries win
    ties). A negative leftover — values that collectively over-round — is
    taken back from the smallest remainders.
    """
    scale = 10 ** decimals
    names = list(values)
    scaled = [values[n] * scale for n in names]
    units = [math.floor(s) for s in scaled]
    leftover = round(total * scale) - sum(units)

    remainders = sorted(range(len(names)), key=lambda i: (-(scaled[i] - units[i]), i))
    i = 0
    while leftover > 0:
        units[remainders[i % len(names)]] += 1
        leftover -= 1
        i += 1
    i = len(names) - 1
    stalled = 0
    while leftover < 0 and stalled < len(names):
        idx = remainders[i % len(names)]
        if units[idx] > 0:
            units[idx] -= 1
            leftover += 1
            stalled = 0
        else:
            stalled += 1
        i -= 1
    return {n: u / scale for n, u in zip(names, units)}


class _ReprFloat(float):
    """Marker: render with repr (full precision) instead of fixed decimals."""


def _encode(value, indent: int) -> str:
    pad = "  " * indent
    if isinstance(value, _ReprFloat):
        return json.dumps(float(value))
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return json.dumps(value)
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_encode(v, indent + 1)}'
                 for k, v in value.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}  {_encode(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot render {type(value)!r}")


def render_report(report: SceneReport) -> str:
    """Canonical report document (the API payload consumed by the UI)."""
    doc = {
        "session": report.session,
        "k": report.k,
        "window_s": float(report.window_s),
        "generator": report.generator,
        "config": {key: _ReprFloat(v) if isinstance(v, float) else v
                   for key, v in report.config.items()},
        "scenes": [
            {
                "rank": s.rank,
                "start_s": float(s.start_s),
                "end_s": float(s.end_s),
                "outlierness": float(s.outlierness),
                "tier": s.tier,
                "representative_frame": s.representative_frame,
                "top_modality": s.top_modality,
                "degenerate_attribution": s.degenerate_attribution,
                "importances": largest_remainder(s.importances),
            }
            for s in report.scenes
        ],
    }
    return _encode(doc, 0) + "\n"


def parse_report(text: str) -> SceneReport:
    doc = json.loads(text)
    scenes = [
        Scene(
            rank=s["rank"],
            start_s=s["start_s"],
            end_s=s["end_s"],
            outlierness=s["outlierness"],
            tier=s["tier"],
            representative_frame=s["representative_frame"],
            top_modality=s["top_modality"],
            importances=s["importances"],
            degenerate_attribution=s["degenerate_attribution"],
        )
        for s in doc["scenes"]
    ]
    return SceneReport(session=doc["session"], k=doc["k"], window_s=doc["window_s"],
                       scenes=scenes, config=doc["config"], generator=doc["generator"])
