"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (run with ``pytest -s tests/test_acceptance.py`` to see
them inline)."""

import functools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from scenesift import gmm
from scenesift.evaluate import benchmark
from scenesift.gmm import GmmConfig
from scenesift.ingest import FeatureFrame, FeatureStream, ModalityLayout, normalize
from scenesift.scoring import score_stream
from scenesift.synth import generate_stream
from tests.conftest import make_stream
from tests.test_gmm import oracle_marginal_by_quadrature, random_state


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\n[FAIL] {label}")
                raise
            print(f"\n[PASS] {label}")
            return result
        return run
    return wrap


@criterion("marginalization oracle: 100 random 2-D mixtures vs trapezoid "
           "integration, 1e-3 relative, < 30 s")
def test_marginalization_oracle():
    started = time.monotonic()
    rng = np.random.default_rng(2024)
    for trial in range(100):
        covariance = "diagonal" if trial % 2 == 0 else "full"
        k = int(rng.integers(1, 4))
        state = random_state(rng, k, 2, covariance)
        sub = gmm.marginalize(state, [0])
        for x0 in rng.uniform(-2.0, 2.0, size=2):
            expected = math.log(oracle_marginal_by_quadrature(state, float(x0)))
            got = gmm.log_density(sub, np.array([x0]))
            assert abs(got - expected) <= 1e-3 * max(1.0, abs(expected)), (
                f"trial {trial}: {got} vs {expected}")
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"suite took {elapsed:.1f}s"


def _batch_em_oracle(x: np.ndarray, iters: int = 300) -> np.ndarray:
    """Plain batch EM for a 2-component 1-D mixture; independent of the
    engine's code paths."""
    mu = np.array([np.quantile(x, 0.25), np.quantile(x, 0.75)])
    var = np.array([1.0, 1.0])
    w = np.array([0.5, 0.5])
    for _ in range(iters):
        logp = (np.log(w)[:, None]
                - 0.5 * (np.log(2 * np.pi * var)[:, None]
                         + (x[None, :] - mu[:, None]) ** 2 / var[:, None]))
        logp -= logp.max(axis=0)
        g = np.exp(logp)
        g /= g.sum(axis=0)
        n = g.sum(axis=1)
        mu = (g @ x) / n
        var = (g @ (x ** 2)) / n - mu ** 2
        w = n / n.sum()
    return np.sort(mu)


@criterion("online-vs-batch EM: 1/t schedule on 5,000 samples recovers "
           "means within 0.1 of the batch oracle, 10 seeds, < 60 s")
def test_online_vs_batch_em():
    started = time.monotonic()
    warmup_n = 10
    for seed in range(10):
        rng = np.random.default_rng(seed)
        component = rng.integers(0, 2, size=5000)
        x = rng.normal(0.0, 1.0, size=5000) + np.where(component == 0, -3.0, 3.0)
        oracle = _batch_em_oracle(x)

        state = gmm.init(GmmConfig(k=2, seed=seed), x[:warmup_n, None])
        for value in x[warmup_n:]:
            t = state.frames_seen + 1
            state = gmm.update(state, np.array([value]), discount=1.0 / t)
        online = np.sort(state.means[:, 0])
        assert np.abs(online - oracle).max() <= 0.1, (
            f"seed {seed}: online {online} vs oracle {oracle}")
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"suite took {elapsed:.1f}s"


@criterion("score-then-update: stored per-frame scores equal pre-update "
           "evaluation exactly on a 1,000-frame stream")
def test_score_then_update_replay(tmp_path):
    layout = ModalityLayout(modalities=(("a", 2), ("b", 2), ("c", 2)), fps=10.0)
    rng = np.random.default_rng(99)
    stream = make_stream(layout, rng.standard_normal((1000, 6)), meta={"session": "replay"})
    stream, _ = normalize(stream)
    config = GmmConfig(seed=99)

    trace_path = tmp_path / "trace.jsonl"
    with open(trace_path, "w") as fh:
        score_stream(stream, config, window_s=15.0, trace=fh)
    records = [json.loads(line) for line in trace_path.read_text().splitlines()]
    assert len(records) == 850  # 1000 frames minus the 150-frame warmup window

    warmup = [f for f in stream.frames if f.timestamp_s < 15.0]
    state = gmm.init(config, np.stack([f.values for f in warmup]))
    for f in warmup:
        state = gmm.update(state, f.values)

    by_index = {f.index: f for f in stream.frames}
    post_update_differs = 0
    for rec in records:
        x = by_index[rec["i"]].values
        assert -gmm.log_density(state, x) == rec["s"], f"frame {rec['i']}"
        state = gmm.update(state, x)
        if -gmm.log_density(state, x) != rec["s"]:
            post_update_differs += 1
    assert post_update_differs > 0.9 * len(records)


@criterion("window geometry: 600 s at 30 fps with 15 s windows yields "
           "exactly 40 windows, window 0 unscored")
def test_window_geometry():
    layout = ModalityLayout(modalities=(("a", 2), ("b", 2)), fps=30.0)
    stream, _ = generate_stream(layout, 600.0, 5)
    stream, _ = normalize(stream)
    series = score_stream(stream, GmmConfig(seed=5), window_s=15.0)
    assert len(series.windows) == 40
    assert series.windows[0].unscored
    assert sum(1 for w in series.windows if w.unscored) == 1
    assert [w.window_index for w in series.windows] == list(range(40))
    assert series.windows[-1].end_s == 600.0


@criterion("synthetic benchmark: 20-seed standard suite reaches mean "
           "recall@10 >= 0.8, recall@15 >= recall@10 per trial, attribution "
           ">= 70% of matched, < 10 min")
def test_synthetic_benchmark():
    started = time.monotonic()
    table = benchmark([{"name": "standard"}], seeds=range(20))
    row = table["rows"][0]

    assert row["recall@10_mean"] >= 0.8, f"mean recall@10 {row['recall@10_mean']}"
    for trial in row["trials"]:
        assert trial["recall@15"] >= trial["recall@10"], trial

    matched = sum(t["matched@10"] for t in row["trials"])
    correct = sum(t["attribution@10"] * t["matched@10"] for t in row["trials"])
    assert matched > 0
    assert correct / matched >= 0.7, f"pooled attribution {correct / matched:.3f}"

    elapsed = time.monotonic() - started
    assert elapsed < 600.0, f"benchmark took {elapsed:.1f}s"
    print(f"  recall@10 mean {row['recall@10_mean']:.3f}, "
          f"recall@15 mean {row['recall@15_mean']:.3f}, "
          f"attribution {correct / matched:.3f}, {elapsed:.0f}s", end="")


@criterion("attribution invariants: importances >= 0 sum to 100 +/- 1e-6, "
           "reorder-invariant, duplicate symmetry within 5 points")
def test_attribution_invariants():
    rng = np.random.default_rng(7)
    values = rng.standard_normal((800, 6))
    values[400:480, 4:] += 4.0

    layout_ab = ModalityLayout(modalities=(("a", 4), ("b", 2)), fps=10.0)
    layout_ba = ModalityLayout(modalities=(("b", 2), ("a", 4)), fps=10.0)
    stream_ab = make_stream(layout_ab, values, meta={"session": "x"})
    stream_ba = make_stream(layout_ba, np.concatenate([values[:, 4:], values[:, :4]], axis=1),
                            meta={"session": "x"})
    series_ab = score_stream(normalize(stream_ab)[0], GmmConfig(seed=7), window_s=10.0)
    series_ba = score_stream(normalize(stream_ba)[0], GmmConfig(seed=7), window_s=10.0)

    for wa, wb in zip(series_ab.scored_windows(), series_ba.scored_windows()):
        vals = list(wa.importances.values())
        assert all(v >= 0.0 for v in vals)
        assert abs(sum(vals) - 100.0) <= 1e-6
        for name in ("a", "b"):
            assert wa.importances[name] == pytest.approx(wb.importances[name], abs=1e-6)

    # identical duplicated modalities with a joint shift split the credit
    dup_layout = ModalityLayout(modalities=(("a", 2), ("b", 2)), fps=10.0)
    for seed in range(3):
        base, _ = generate_stream(ModalityLayout(modalities=(("a", 2),), fps=10.0),
                                  120.0, seed)
        frames = []
        for f in base.frames:
            doubled = np.concatenate([f.values, f.values])
            if 50.0 <= f.timestamp_s < 60.0:
                doubled = doubled + 5.0
            frames.append(FeatureFrame(index=f.index, timestamp_s=f.timestamp_s,
                                       values=doubled))
        stream = FeatureStream(layout=dup_layout, frames=frames, meta={"session": "dup"})
        stream, _ = normalize(stream)
        series = score_stream(stream, GmmConfig(seed=seed), window_s=10.0)
        hit = series.windows[5]
        assert not hit.unscored
        assert abs(hit.importances["a"] - hit.importances["b"]) < 5.0


@criterion("determinism: the analyze CLI is byte-identical across reruns")
def test_cli_determinism(tmp_path):
    layout = ModalityLayout(modalities=(("a", 2), ("b", 3)), fps=10.0)
    from scenesift.ingest import serialize_frames, serialize_manifest
    stream, _ = generate_stream(layout, 90.0, 13)
    (tmp_path / "manifest.json").write_text(serialize_manifest(layout))
    (tmp_path / "frames.jsonl").write_text(serialize_frames(stream))

    outputs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "scenesift.cli", "analyze",
             "--manifest", str(tmp_path / "manifest.json"),
             "--frames", str(tmp_path / "frames.jsonl"),
             "--window", "15", "--top-k", "5", "--seed", "3",
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert len(outputs[0]) > 100


@criterion("metric fixtures: perfect match 1.0, disjoint 0.0, "
           "4-of-10 overlap 0.4, all exact")
def test_metric_fixtures():
    from scenesift.evaluate import recall_at_k
    from scenesift.report import Scene, SceneReport
    from scenesift.synth import Annotation, AnnotationSet

    def report(intervals):
        scenes = [Scene(rank=i + 1, start_s=s, end_s=e, outlierness=50.0 - i,
                        tier="dark" if i < 3 else "light", representative_frame=0,
                        top_modality="face", importances={"face": 100.0})
                  for i, (s, e) in enumerate(intervals)]
        return SceneReport(session="f", k=max(len(scenes), 1), window_s=15.0,
                           scenes=scenes)

    def annotations(intervals):
        return AnnotationSet(session="f",
                             intervals=[Annotation(s, e) for s, e in intervals])

    exact = [(i * 15.0, (i + 1) * 15.0) for i in range(10)]
    assert recall_at_k(report(exact), annotations(exact)).recall_at_k == 1.0

    disjoint_scenes = [(0.0, 15.0), (30.0, 45.0)]
    far = [(100.0, 110.0), (200.0, 210.0)]
    assert recall_at_k(report(disjoint_scenes), annotations(far)).recall_at_k == 0.0

    anns = [(i * 30.0, i * 30.0 + 10.0) for i in range(10)]
    scenes = [(5.0, 20.0), (35.0, 50.0), (65.0, 80.0), (95.0, 110.0),
              (400.0, 415.0), (430.0, 445.0)]
    metrics = recall_at_k(report(scenes), annotations(anns))
    assert metrics.recall_at_k == 0.4
    assert metrics.matched == 4
