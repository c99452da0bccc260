"""Window-by-window outlier scoring with per-modality attribution.

The frame loop is strictly score-then-update: every frame is scored with
``-log_density`` under the model state built from earlier frames only, then
folded into the model. Window 0 only initializes the model and is marked
unscored. Per window we report the aggregate outlierness, the contribution of
each modality (the drop in negative log-density when its dimensions are
marginalized away, normalized by modality size), and the single most anomalous
frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, NamedTuple

import numpy as np

from . import gmm
from .errors import InsufficientDataError, NotNormalizedError, ParameterError
from .ingest import FeatureFrame, FeatureStream, ModalityLayout

DEFAULT_WINDOW_S = 15.0

# A window is only scored when at least this share of its nominal frame count
# is valid; sparser windows would produce misleading aggregates.
MIN_COVERAGE = 0.5

WINDOW_AGGS = ("mean", "max")


@dataclass
class WindowScore:
    window_index: int
    start_s: float
    end_s: float
    outlierness: float | None
    contributions: dict[str, float] | None
    importances: dict[str, float] | None
    representative_frame: int | None
    scored_frames: int
    unscored: bool
    degenerate_attribution: bool = False


@dataclass
class ScoreSeries:
    session: str
    layout: ModalityLayout
    config: dict
    window_s: float
    windows: list[WindowScore] = field(default_factory=list)

    def scored_windows(self) -> list[WindowScore]:
        return [w for w in self.windows if not w.unscored]


class AttributionResult(NamedTuple):
    contributions: dict[str, float]
    importances: dict[str, float]
    degenerate: bool


def _attribution(s_full: float, s_marg: dict[str, float], layout: ModalityLayout,
                 dim_normalized: bool) -> AttributionResult:
    """Turn full/marginal mean scores into contributions and percentages.

    contribution c_m = (S_full - S_marg(m)) / |dims of m| (division skipped in
    raw mode). Negative contributions are clamped to zero before normalizing;
    if nothing is positive the attribution is degenerate and reported uniform.
    """
    contributions: dict[str, float] = {}
    for name, dim in layout.modalities:
        gap = s_full - s_marg[name]
        contributions[name] = gap / dim if dim_normalized else gap

    clamped = {name: max(c, 0.0) for name, c in contributions.items()}
    total = sum(clamped.values())
    if total <= 0.0:
        n = len(layout.modalities)
        return AttributionResult(contributions, {name: 100.0 / n for name in clamped}, True)
    importances = {name: 100.0 * (c / total) for name, c in clamped.items()}
    return AttributionResult(contributions, importances, False)


def modality_contributions(state: gmm.GmmState, frames: list[FeatureFrame],
                           layout: ModalityLayout,
                           dim_normalized: bool = True) -> AttributionResult:
    """Attribute the windowed score under one fixed model state.

    For each modality the frames are re-scored with that modality's dimensions
    marginalized out of ``state``; the per-dimension-normalized drop in mean
    negative log-density is its contribution. A single-modality layout
    trivially receives 100% (the empty marginal has log-density 0).
    """
    valid = [f for f in frames if f.valid]
    if not valid:
        raise InsufficientDataError("attribution needs at least one valid frame")

    slices = layout.slices()
    all_dims = np.arange(layout.total_dim)
    s_full = float(np.mean([-gmm.log_density(state, f.values) for f in valid]))

    s_marg: dict[str, float] = {}
    for name, sl in slices.items():
        keep = np.concatenate([all_dims[: sl.start], all_dims[sl.stop:]])
        if keep.size == 0:
            s_marg[name] = 0.0
            continue
        sub = gmm.marginalize(state, keep)
        s_marg[name] = float(np.mean([-gmm.log_density(sub, f.values[keep]) for f in valid]))

    return _attribution(s_full, s_marg, layout, dim_normalized)


def representative_frame(state: gmm.GmmState, frames: list[FeatureFrame]) -> int:
    """Index of the valid frame with the highest score; earliest wins ties."""
    best_idx = None
    best_score = -np.inf
    for f in frames:
        if not f.valid:
            continue
        s = -gmm.log_density(state, f.values)
        if s > best_score:
            best_score = s
            best_idx = f.index
    if best_idx is None:
        raise InsufficientDataError("no valid frame in window")
    return best_idx


def score_stream(stream: FeatureStream, config: gmm.GmmConfig,
                 window_s: float = DEFAULT_WINDOW_S, *,
                 window_agg: str = "mean", dim_normalized: bool = True,
                 trace: IO[str] | None = None) -> ScoreSeries:
    """Run the full frame loop over a normalized stream.

    Window 0's valid frames initialize the model — farthest-point seeding
    with config.seed, then one discounted update per warmup frame — and that
    window is emitted unscored. Every later valid frame is scored against the
    pre-update state — full score plus one marginal score per modality — and
    then fed to the discounted update. Invalid frames are skipped entirely.
    Windows with under-50% valid coverage are emitted unscored, though their
    valid frames still advance the model.

    ``trace`` (optional) receives one JSON line per scored frame with the
    stored full and marginal scores, enabling exact replay checks.
    """
    if stream.meta.get("normalized") is None:
        raise NotNormalizedError("stream must be normalized before scoring")
    if window_s <= 0:
        raise ParameterError(f"window_s must be > 0, got {window_s}")
    if window_agg not in WINDOW_AGGS:
        raise ParameterError(f"window_agg must be one of {WINDOW_AGGS}")
    if not stream.frames:
        raise InsufficientDataError("empty stream")

    layout = stream.layout
    if stream.duration_s + 1e-9 < 2 * window_s:
        raise InsufficientDataError(
            f"stream spans {stream.duration_s:.1f}s; need at least two "
            f"{window_s:.0f}s windows")
    n_windows = int(stream.frames[-1].timestamp_s // window_s) + 1

    groups: list[list[FeatureFrame]] = [[] for _ in range(n_windows)]
    for f in stream.frames:
        w = min(int(f.timestamp_s // window_s), n_windows - 1)
        groups[w].append(f)

    warmup_pool = [f for f in groups[0] if f.valid]
    if config.init_frames:
        warmup_pool = warmup_pool[: config.init_frames]
    if len(warmup_pool) < config.k:
        raise InsufficientDataError(
            f"warmup window has {len(warmup_pool)} valid frames; need >= k={config.k}")
    # Seed from the warmup batch, then run the same discounted updates over it
    # (unscored) so window 1 meets a converged model, not a fresh seed.
    state = gmm.init(config, np.stack([f.values for f in warmup_pool]))
    for f in warmup_pool:
        state = gmm.update(state, f.values)

    slices = layout.slices()
    all_dims = np.arange(layout.total_dim)
    keep_dims = {}
    for name, sl in slices.items():
        keep_dims[name] = np.concatenate([all_dims[: sl.start], all_dims[sl.stop:]])

    expected_frames = window_s * layout.fps
    windows: list[WindowScore] = [WindowScore(
        window_index=0, start_s=0.0, end_s=window_s, outlierness=None,
        contributions=None, importances=None, representative_frame=None,
        scored_frames=0, unscored=True)]

    for w in range(1, n_windows):
        scores: list[float] = []
        marg_scores: dict[str, list[float]] = {name: [] for name in slices}
        frame_ids: list[int] = []

        for f in groups[w]:
            if not f.valid:
                continue
            x = f.values
            s = -gmm.log_density(state, x)
            margs: dict[str, float] = {}
            for name, keep in keep_dims.items():
                if keep.size == 0:
                    margs[name] = 0.0
                else:
                    sub = gmm.marginalize(state, keep)
                    margs[name] = -gmm.log_density(sub, x[keep])
            if trace is not None:
                trace.write(json.dumps({"i": f.index, "w": w, "s": s, "marg": margs}) + "\n")
            scores.append(s)
            for name in slices:
                marg_scores[name].append(margs[name])
            frame_ids.append(f.index)
            state = gmm.update(state, x)

        start_s = w * window_s
        end_s = (w + 1) * window_s
        if len(scores) / expected_frames < MIN_COVERAGE:
            windows.append(WindowScore(
                window_index=w, start_s=start_s, end_s=end_s, outlierness=None,
                contributions=None, importances=None, representative_frame=None,
                scored_frames=len(scores), unscored=True))
            continue

        s_arr = np.asarray(scores)
        outlierness = float(s_arr.max() if window_agg == "max" else s_arr.mean())
        s_full_mean = float(s_arr.mean())
        s_marg_mean = {name: float(np.mean(vals)) for name, vals in marg_scores.items()}
        attribution = _attribution(s_full_mean, s_marg_mean, layout, dim_normalized)

        best = int(np.argmax(s_arr))  # argmax returns the earliest maximum
        windows.append(WindowScore(
            window_index=w, start_s=start_s, end_s=end_s, outlierness=outlierness,
            contributions=attribution.contributions,
            importances=attribution.importances,
            representative_frame=frame_ids[best],
            scored_frames=len(scores), unscored=False,
            degenerate_attribution=attribution.degenerate))

    series_config = config.to_dict()
    series_config["window_agg"] = window_agg
    series_config["dim_normalized"] = dim_normalized
    return ScoreSeries(
        session=str(stream.meta.get("session", "")),
        layout=layout,
        config=series_config,
        window_s=float(window_s),
        windows=windows,
    )


def serialize_series(series: ScoreSeries) -> str:
    """Deterministic JSON document for the full window series."""
    doc = {
        "session": series.session,
        "window_s": series.window_s,
        "layout": {
            "fps": series.layout.fps,
            "modalities": [{"name": n, "dim": d} for n, d in series.layout.modalities],
        },
        "config": series.config,
        "windows": [
            {
                "window_index": w.window_index,
                "start_s": w.start_s,
                "end_s": w.end_s,
                "unscored": w.unscored,
                "scored_frames": w.scored_frames,
                "outlierness": w.outlierness,
                "contributions": w.contributions,
                "importances": w.importances,
                "representative_frame": w.representative_frame,
                "degenerate_attribution": w.degenerate_attribution,
            }
            for w in series.windows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_series(text: str) -> ScoreSeries:
    from .ingest import parse_manifest

    doc = json.loads(text)
    layout = parse_manifest(doc["layout"])
    windows = [
        WindowScore(
            window_index=w["window_index"],
            start_s=w["start_s"],
            end_s=w["end_s"],
            outlierness=w["outlierness"],
            contributions=w["contributions"],
            importances=w["importances"],
            representative_frame=w["representative_frame"],
            scored_frames=w["scored_frames"],
            unscored=w["unscored"],
            degenerate_attribution=w.get("degenerate_attribution", False),
        )
        for w in doc["windows"]
    ]
    return ScoreSeries(session=doc["session"], layout=layout, config=doc["config"],
                       window_s=doc["window_s"], windows=windows)
