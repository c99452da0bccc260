"""On-disk session store: feature documents, computed series, and reports.

Sessions live under ``<root>/sessions/<id>/``. The default id is a content
hash of the uploaded documents, so identical uploads collide instead of
duplicating. All writes go through write-temp-then-rename; each session has
at most one scoring job at a time.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    ConflictError,
    NotFoundError,
    NotReadyError,
    ScenesiftError,
)
from .gmm import GmmConfig
from .ingest import ImputePolicy, impute_missing, normalize, parse_frames, parse_manifest
from .report import render_report, select_top_k
from .scoring import ScoreSeries, parse_series, score_stream, serialize_series

DEFAULT_WINDOW_S = 15.0
DEFAULT_REPORT_K = 10


@dataclass
class Session:
    id: str
    title: str
    created_at: str
    status: str  # pending | scored | failed
    config: dict = field(default_factory=dict)
    video_path: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _content_id(manifest_text: str, frames_text: str) -> str:
    digest = hashlib.sha256()
    digest.update(manifest_text.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(frames_text.encode("utf-8"))
    return digest.hexdigest()[:16]


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    # -- lifecycle -------------------------------------------------------

    def create(self, manifest_text: str, frames_text: str, *,
               session_id: str | None = None, title: str = "",
               video_path: str | None = None, config: dict | None = None) -> Session:
        """Validate the manifest, persist the documents, mark pending.

        Frame parsing and scoring happen in the scoring job so a large upload
        never blocks; a malformed frame file surfaces as status=failed with
        the stored diagnostic.
        """
        parse_manifest(manifest_text)  # raises ManifestError with field path

        sid = session_id or _content_id(manifest_text, frames_text)
        sdir = self._dir(sid)
        if sdir.exists():
            raise ConflictError(f"session {sid!r} already exists")
        sdir.mkdir(parents=True)

        session = Session(
            id=sid,
            title=title,
            created_at=datetime.now(timezone.utc).isoformat(),
            status="pending",
            config=dict(config or {}),
            video_path=video_path,
        )
        _atomic_write(sdir / "manifest.json", manifest_text)
        _atomic_write(sdir / "frames.jsonl", frames_text)
        self._save_session(session)
        return session

    def _save_session(self, session: Session) -> None:
        _atomic_write(self._dir(session.id) / "session.json",
                      json.dumps(session.to_dict(), indent=2) + "\n")

    def get(self, session_id: str) -> Session:
        path = self._dir(session_id) / "session.json"
        if not path.exists():
            raise NotFoundError(f"unknown session {session_id!r}")
        return Session(**json.loads(path.read_text()))

    def list(self) -> list[Session]:
        out = []
        base = self.root / "sessions"
        for entry in sorted(base.iterdir()):
            if (entry / "session.json").exists():
                out.append(Session(**json.loads((entry / "session.json").read_text())))
        return out

    # -- scoring job -----------------------------------------------------

    def score(self, session_id: str) -> Session:
        """Run the full pipeline for a pending session (exclusive per id)."""
        with self._lock(session_id):
            session = self.get(session_id)
            if session.status == "scored":
                return session
            try:
                series = self._run_pipeline(session)
                _atomic_write(self._dir(session_id) / "series.json",
                              serialize_series(series))
                k = int(session.config.get("top_k", DEFAULT_REPORT_K))
                _atomic_write(self._dir(session_id) / "report.json",
                              render_report(select_top_k(series, k)))
                session.status = "scored"
                session.error = None
            except ScenesiftError as exc:
                session.status = "failed"
                session.error = f"{type(exc).__name__}: {exc}"
            self._save_session(session)
            return session

    def _run_pipeline(self, session: Session) -> ScoreSeries:
        sdir = self._dir(session.id)
        cfg = session.config
        layout = parse_manifest((sdir / "manifest.json").read_text())
        stream = parse_frames((sdir / "frames.jsonl").read_text(), layout,
                              meta={"session": session.id})
        policy = ImputePolicy(
            threshold=float(cfg.get("conf_threshold", 0.5)),
            max_gap_s=float(cfg.get("max_gap_s", 1.0)))
        stream = impute_missing(stream, policy)
        stream, _ = normalize(stream, mode=cfg.get("normalize", "two_pass"))
        gmm_config = GmmConfig(
            k=int(cfg.get("k", 3)),
            discount_r=float(cfg.get("discount_r", 0.005)),
            covariance=cfg.get("covariance", "diagonal"),
            reg_eps=float(cfg.get("reg_eps", 1e-6)),
            seed=int(cfg.get("seed", 0)),
            init_frames=cfg.get("init_frames"),
        )
        return score_stream(
            stream, gmm_config,
            window_s=float(cfg.get("window_s", DEFAULT_WINDOW_S)),
            window_agg=cfg.get("window_agg", "mean"),
            dim_normalized=bool(cfg.get("dim_normalized", True)),
        )

    # -- reads -----------------------------------------------------------

    def _require_scored(self, session_id: str) -> Session:
        session = self.get(session_id)
        if session.status == "pending":
            raise NotReadyError(f"session {session_id!r} is still scoring")
        if session.status == "failed":
            raise NotReadyError(f"session {session_id!r} failed: {session.error}")
        return session

    def series_text(self, session_id: str) -> str:
        self._require_scored(session_id)
        return (self._dir(session_id) / "series.json").read_text()

    def series(self, session_id: str) -> ScoreSeries:
        return parse_series(self.series_text(session_id))

    def scenes_text(self, session_id: str, k: int) -> str:
        """Render the top-k report from the stored series (deterministic, so
        repeated calls are byte-identical)."""
        series = self.series(session_id)
        return render_report(select_top_k(series, k))

    def video_path(self, session_id: str) -> Path:
        session = self.get(session_id)
        if not session.video_path:
            raise NotFoundError(f"session {session_id!r} has no video")
        path = Path(session.video_path)
        if not path.exists():
            raise NotFoundError(f"video file missing for session {session_id!r}")
        return path
