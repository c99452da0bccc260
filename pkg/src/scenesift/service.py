"""HTTP API over the session store, plus static assets for the review UI.

Endpoints:
    POST /sessions                    create + enqueue scoring
    GET  /sessions                    list sessions
    GET  /sessions/{id}               session metadata
    GET  /sessions/{id}/scores        full window series document
    GET  /sessions/{id}/scenes?k=6    top-k scene report document
    GET  /sessions/{id}/video         media bytes, Range requests honored

Scoring runs in a per-session background thread; reads never block on it.
Anything that is not an API route is served from the static directory (the
built review UI) when one is configured.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import (
    ConflictError,
    InvalidRangeError,
    ManifestError,
    NotFoundError,
    NotReadyError,
    ParameterError,
    ScenesiftError,
)
from .store import SessionStore

logger = logging.getLogger(__name__)

_SESSION_ROUTE = re.compile(r"^/sessions/([A-Za-z0-9_.-]+)(/scores|/scenes|/video)?$")

DEFAULT_SCENES_K = 6


def parse_range(header: str, size: int) -> tuple[int, int]:
    """Resolve a single byte-range header against a file of ``size`` bytes."""
    m = re.fullmatch(r"bytes=(\d*)-(\d*)", header.strip())
    if not m or (not m.group(1) and not m.group(2)):
        raise InvalidRangeError(f"malformed range {header!r}")
    start_s, end_s = m.groups()
    if not start_s:
        suffix = int(end_s)
        if suffix == 0:
            raise InvalidRangeError("zero-length suffix range")
        start = max(0, size - suffix)
        end = size - 1
    else:
        start = int(start_s)
        if start >= size:
            raise InvalidRangeError(f"range start {start} beyond file size {size}")
        end = min(int(end_s), size - 1) if end_s else size - 1
        if end < start:
            raise InvalidRangeError(f"range {header!r} is empty")
    return start, end


class ReviewApiHandler(BaseHTTPRequestHandler):
    store: SessionStore
    static_dir: Path | None = None

    # -- helpers ---------------------------------------------------------

    def _send_text(self, code: int, body: str, content_type="application/json") -> None:
        data = body.encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send_json(self, code: int, obj) -> None:
        self._send_text(code, json.dumps(obj, indent=2) + "\n")

    def _send_error_for(self, exc: Exception) -> None:
        code = 500
        if isinstance(exc, NotFoundError):
            code = 404
        elif isinstance(exc, ConflictError):
            code = 409
        elif isinstance(exc, NotReadyError):
            code = 409
        elif isinstance(exc, (ManifestError, ScenesiftError)):
            code = 422 if isinstance(exc, ManifestError) else 400
        if isinstance(exc, InvalidRangeError):
            code = 416
        self._send_json(code, {"error": str(exc), "type": type(exc).__name__})

    def log_message(self, fmt, *args):  # keep test output quiet
        logger.debug("%s - %s", self.address_string(), fmt % args)

    # -- routes ----------------------------------------------------------

    def do_POST(self):
        if self.path.rstrip("/") != "/sessions":
            self._send_json(404, {"error": "unknown endpoint"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            if not isinstance(body, dict):
                raise ManifestError("request body: expected a JSON object")
            manifest = body.get("manifest")
            if isinstance(manifest, dict):
                manifest = json.dumps(manifest)
            if not isinstance(manifest, str):
                raise ManifestError("request body.manifest: required")
            frames = body.get("frames_jsonl")
            if not isinstance(frames, str):
                raise ManifestError("request body.frames_jsonl: required")
            session = self.store.create(
                manifest, frames,
                session_id=body.get("id"),
                title=body.get("title", ""),
                video_path=body.get("video_path"),
                config=body.get("config"),
            )
        except json.JSONDecodeError as exc:
            self._send_json(422, {"error": f"invalid JSON body: {exc}"})
            return
        except Exception as exc:
            self._send_error_for(exc)
            return

        thread = threading.Thread(target=self.store.score, args=(session.id,),
                                  daemon=True)
        thread.start()
        self._send_json(201, {"id": session.id, "status": session.status})

    def do_GET(self):
        path, _, query = self.path.partition("?")
        try:
            if path.rstrip("/") == "/sessions":
                self._send_json(200, {"sessions": [s.to_dict() for s in self.store.list()]})
                return
            m = _SESSION_ROUTE.match(path)
            if m:
                sid, sub = m.group(1), m.group(2) or ""
                if sub == "":
                    self._send_json(200, self.store.get(sid).to_dict())
                elif sub == "/scores":
                    text = self.store.series_text(sid)
                    self._validate_tiling(text)
                    self._send_text(200, text)
                elif sub == "/scenes":
                    k = self._parse_k(query)
                    self._send_text(200, self.store.scenes_text(sid, k))
                elif sub == "/video":
                    self._send_video(sid)
                return
            self._serve_static(path)
        except Exception as exc:
            self._send_error_for(exc)

    def _parse_k(self, query: str) -> int:
        k = DEFAULT_SCENES_K
        for part in query.split("&"):
            if part.startswith("k="):
                try:
                    k = int(part[2:])
                except ValueError:
                    raise ParameterError(f"k must be an integer, got {part[2:]!r}")
        if k <= 0:
            raise ParameterError(f"k must be positive, got {k}")
        return k

    def _validate_tiling(self, series_text: str) -> None:
        doc = json.loads(series_text)
        expected = 0.0
        for w in doc["windows"]:
            if abs(w["start_s"] - expected) > 1e-9:
                raise ScenesiftError("series windows do not tile the duration")
            expected = w["end_s"]

    def _send_video(self, sid: str) -> None:
        path = self.store.video_path(sid)
        size = path.stat().st_size
        content_type = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        range_header = self.headers.get("Range")
        with open(path, "rb") as fh:
            if range_header is None:
                self.send_response(200)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(size))
                self.send_header("Accept-Ranges", "bytes")
                self.end_headers()
                self.wfile.write(fh.read())
                return
            try:
                start, end = parse_range(range_header, size)
            except InvalidRangeError as exc:
                self.send_response(416)
                self.send_header("Content-Range", f"bytes */{size}")
                body = json.dumps({"error": str(exc)}).encode()
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            fh.seek(start)
            data = fh.read(end - start + 1)
        self.send_response(206)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Range", f"bytes {start}-{end}/{size}")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Accept-Ranges", "bytes")
        self.end_headers()
        self.wfile.write(data)

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_json(404, {"error": "unknown endpoint"})
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(store: SessionStore, host: str = "127.0.0.1", port: int = 0,
                static_dir: str | Path | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (ReviewApiHandler,), {
        "store": store,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(store: SessionStore, host: str, port: int,
                  static_dir: str | Path | None = None) -> None:
    server = make_server(store, host, port, static_dir)
    logger.info("serving on %s:%d (data: %s)", host, server.server_address[1], store.root)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
