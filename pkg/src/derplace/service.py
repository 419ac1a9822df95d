"""HTTP session service consumed by the browser UI and scripted clients.

Endpoints (JSON request/response unless noted):

    POST /feeders                     upload a feeder file -> {"id"}
    GET  /feeders/{id}                feeder document + layout coordinates
    POST /sessions                    {feeder_id, mode, seed?, sampling?, threshold?}
    GET  /sessions/{id}               session state summary
    POST /sessions/{id}/heatmap       {"perf_node": "n5"} or {"colocated": true},
                                      optional {"samples": N} override
    POST /sessions/{id}/place         {"actuator", "performance"} (409 on red/grey)
    POST /sessions/{id}/undo
    GET  /sessions/{id}/branches      branch statistics of the session
    POST /sessions/{id}/auto          {"seed": n} runs the automatic co-located mode
    GET  /sessions/{id}/export.svg    latest heatmap as SVG

Mutations are appended to the session log and persisted before the response
is sent; per-session handling is serialized with a lock while separate
sessions proceed concurrently.  When a UI bundle directory is configured,
its files are served at the root path.
"""

from __future__ import annotations

import json
import mimetypes
import re
import threading
import uuid
from dataclasses import asdict, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import placement
from .control import SamplingParams
from .feeder import FeederFormatError, FeederValidationError, feeder_to_dict
from .placement import PlacementRejectedError, Session
from .store import SessionStore, StoreError
from .svg import export_heatmap_svg, tree_layout


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _session_summary(sid: str, s: Session, feeder_id: str) -> dict:
    return {
        "id": sid,
        "feeder_id": feeder_id,
        "mode": s.mode,
        "threshold": s.threshold,
        "sampling": asdict(s.sampling),
        "seed": s.seed,
        "step": s.step,
        "core": [
            {
                "actuator": p.pair.actuator,
                "performance": p.pair.performance,
                "phases": p.pair.phases,
                "fraction": p.fraction,
            }
            for p in s.core
        ],
        "history": list(s.history),
        "latest_heatmap": s.latest_heatmap.to_dict() if s.latest_heatmap else None,
    }


class PlacementService:
    """Session registry plus request dispatch, independent of the transport."""

    def __init__(self, store: SessionStore, workers: int | None = None):
        self.store = store
        self.workers = workers
        self._sessions: dict[str, tuple[Session, str]] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    # -- session bookkeeping ------------------------------------------------

    def _lock_for(self, sid: str) -> threading.RLock:
        with self._registry_lock:
            if sid not in self._locks:
                self._locks[sid] = threading.RLock()
            return self._locks[sid]

    def _get_session(self, sid: str) -> tuple[Session, str]:
        with self._registry_lock:
            if sid in self._sessions:
                return self._sessions[sid]
        try:
            loaded = self.store.load_session(sid)
        except StoreError as exc:
            raise ApiError(404, str(exc)) from None
        with self._registry_lock:
            self._sessions[sid] = loaded
        return loaded

    # -- handlers ------------------------------------------------------------

    def post_feeder(self, body: dict | str) -> tuple[int, dict]:
        text = body if isinstance(body, str) else json.dumps(body)
        try:
            fid = self.store.put_feeder(text)
        except (FeederFormatError, FeederValidationError) as exc:
            raise ApiError(400, str(exc)) from None
        return 201, {"id": fid}

    def get_feeder(self, fid: str) -> tuple[int, dict]:
        try:
            feeder = self.store.get_feeder(fid)
        except StoreError as exc:
            raise ApiError(404, str(exc)) from None
        layout = (
            feeder.positions
            if len(feeder.positions) == len(feeder.nodes)
            else tree_layout(feeder)
        )
        return 200, {
            "id": fid,
            "doc": feeder_to_dict(feeder),
            "substation": feeder.substation_id,
            "layout": {nid: list(xy) for nid, xy in layout.items()},
        }

    def post_session(self, body: dict) -> tuple[int, dict]:
        try:
            fid = body["feeder_id"]
            mode = body.get("mode", "npp")
            feeder = self.store.get_feeder(fid)
        except KeyError:
            raise ApiError(400, "feeder_id is required") from None
        except StoreError as exc:
            raise ApiError(404, str(exc)) from None
        sampling = SamplingParams(**body.get("sampling", {}))
        try:
            session = placement.new_session(
                feeder,
                mode,
                sampling=sampling,
                threshold=float(body.get("threshold", placement.DEFAULT_THRESHOLD)),
                seed=int(body.get("seed", 0)),
                workers=self.workers,
            )
        except ValueError as exc:
            raise ApiError(400, str(exc)) from None
        sid = uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._sessions[sid] = (session, fid)
        self.store.save_session(sid, session, fid)
        return 201, {"id": sid}

    def get_session(self, sid: str) -> tuple[int, dict]:
        session, fid = self._get_session(sid)
        with self._lock_for(sid):
            return 200, _session_summary(sid, session, fid)

    def post_heatmap(self, sid: str, body: dict) -> tuple[int, dict]:
        session, fid = self._get_session(sid)
        with self._lock_for(sid):
            override = body.get("samples")
            original = session.sampling
            if override:
                session.sampling = replace(original, count=int(override))
            try:
                if body.get("colocated"):
                    heatmap = placement.heatmap_colocated(session)
                elif "perf_node" in body:
                    heatmap = placement.heatmap_npp(session, body["perf_node"])
                else:
                    raise ApiError(400, "request needs perf_node or colocated")
                if override:
                    session.history[-1]["samples"] = int(override)
            except KeyError as exc:
                raise ApiError(404, str(exc)) from None
            finally:
                session.sampling = original
            self.store.save_session(sid, session, fid)
            return 200, heatmap.to_dict()

    def post_place(self, sid: str, body: dict) -> tuple[int, dict]:
        session, fid = self._get_session(sid)
        with self._lock_for(sid):
            try:
                placement.accept_placement(
                    session, body["actuator"], body["performance"]
                )
            except KeyError:
                raise ApiError(400, "actuator and performance are required") from None
            except PlacementRejectedError as exc:
                raise ApiError(409, str(exc)) from None
            self.store.save_session(sid, session, fid)
            return 200, _session_summary(sid, session, fid)

    def post_undo(self, sid: str) -> tuple[int, dict]:
        session, fid = self._get_session(sid)
        with self._lock_for(sid):
            try:
                placement.undo(session)
            except PlacementRejectedError as exc:
                raise ApiError(409, str(exc)) from None
            self.store.save_session(sid, session, fid)
            return 200, _session_summary(sid, session, fid)

    def get_branches(self, sid: str) -> tuple[int, dict]:
        session, _ = self._get_session(sid)
        with self._lock_for(sid):
            stats = placement.branch_stats(session)
            return 200, {
                "branches": [
                    {
                        "start": b.start,
                        "end": b.end,
                        "length": b.length,
                        "percent_stable": b.percent_stable,
                        "n_used": b.n_used,
                        "n_involving": b.n_involving,
                    }
                    for b in stats
                ]
            }

    def post_auto(self, sid: str, body: dict) -> tuple[int, dict]:
        session, fid = self._get_session(sid)
        with self._lock_for(sid):
            stats = placement.run_auto_ocpp(session, seed=int(body.get("seed", session.seed)))
            self.store.save_session(sid, session, fid)
            return 200, stats.to_dict()

    def export_svg(self, sid: str) -> str:
        session, _ = self._get_session(sid)
        with self._lock_for(sid):
            if session.latest_heatmap is None:
                raise ApiError(404, "session has no heatmap yet")
            return export_heatmap_svg(session.latest_heatmap, session.feeder)


_ROUTES = [
    ("POST", re.compile(r"^/feeders$"), "post_feeder_route"),
    ("GET", re.compile(r"^/feeders/(?P<fid>[\w-]+)$"), "get_feeder_route"),
    ("POST", re.compile(r"^/sessions$"), "post_session_route"),
    ("GET", re.compile(r"^/sessions/(?P<sid>[\w-]+)$"), "get_session_route"),
    ("POST", re.compile(r"^/sessions/(?P<sid>[\w-]+)/heatmap$"), "post_heatmap_route"),
    ("POST", re.compile(r"^/sessions/(?P<sid>[\w-]+)/place$"), "post_place_route"),
    ("POST", re.compile(r"^/sessions/(?P<sid>[\w-]+)/undo$"), "post_undo_route"),
    ("GET", re.compile(r"^/sessions/(?P<sid>[\w-]+)/branches$"), "get_branches_route"),
    ("POST", re.compile(r"^/sessions/(?P<sid>[\w-]+)/auto$"), "post_auto_route"),
    ("GET", re.compile(r"^/sessions/(?P<sid>[\w-]+)/export\.svg$"), "export_svg_route"),
]


def make_handler(service: PlacementService, ui_dir: Path | None = None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        # quiet by default; tests and demos don't want per-request chatter
        def log_message(self, fmt, *args):
            pass

        def _send(self, status: int, payload: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(payload)

        def _send_json(self, status: int, obj) -> None:
            self._send(status, json.dumps(obj).encode(), "application/json")

        def _read_body(self) -> dict | str:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            try:
                return json.loads(raw)
            except json.JSONDecodeError:
                raise ApiError(400, "request body is not valid JSON") from None

        def do_OPTIONS(self):
            self._send(204, b"", "text/plain")

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def _dispatch(self, method: str) -> None:
            path = self.path.split("?", 1)[0]
            try:
                for verb, pattern, name in _ROUTES:
                    if verb != method:
                        continue
                    match = pattern.match(path)
                    if match:
                        getattr(self, name)(**match.groupdict())
                        return
                if method == "GET" and ui_dir is not None and self._serve_static(path):
                    return
                raise ApiError(404, f"no route for {method} {path}")
            except ApiError as exc:
                self._send_json(exc.status, {"error": exc.message})
            except Exception as exc:  # pragma: no cover - defensive
                self._send_json(500, {"error": f"internal error: {exc}"})

        def _serve_static(self, path: str) -> bool:
            rel = "index.html" if path in ("/", "") else path.lstrip("/")
            target = (ui_dir / rel).resolve()
            if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
                return False
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            self._send(200, target.read_bytes(), ctype)
            return True

        # -- route adapters ------------------------------------------------

        def post_feeder_route(self):
            status, obj = service.post_feeder(self._read_body())
            self._send_json(status, obj)

        def get_feeder_route(self, fid):
            status, obj = service.get_feeder(fid)
            self._send_json(status, obj)

        def post_session_route(self):
            status, obj = service.post_session(self._read_body())
            self._send_json(status, obj)

        def get_session_route(self, sid):
            status, obj = service.get_session(sid)
            self._send_json(status, obj)

        def post_heatmap_route(self, sid):
            status, obj = service.post_heatmap(sid, self._read_body())
            self._send_json(status, obj)

        def post_place_route(self, sid):
            status, obj = service.post_place(sid, self._read_body())
            self._send_json(status, obj)

        def post_undo_route(self, sid):
            self._read_body()  # consume any body; keep-alive needs the stream drained
            status, obj = service.post_undo(sid)
            self._send_json(status, obj)

        def get_branches_route(self, sid):
            status, obj = service.get_branches(sid)
            self._send_json(status, obj)

        def post_auto_route(self, sid):
            status, obj = service.post_auto(sid, self._read_body())
            self._send_json(status, obj)

        def export_svg_route(self, sid):
            svg = service.export_svg(sid)
            self._send(200, svg.encode(), "image/svg+xml")

    return Handler


def make_server(
    host: str,
    port: int,
    store_path: str | Path,
    ui_dir: str | Path | None = None,
    workers: int | None = None,
) -> ThreadingHTTPServer:
    """Build the HTTP server; ``port=0`` picks a free port (see server_port)."""
    service = PlacementService(SessionStore(store_path), workers=workers)
    handler = make_handler(service, Path(ui_dir) if ui_dir else None)
    return ThreadingHTTPServer((host, port), handler)


def serve(
    host: str = "127.0.0.1",
    port: int = 8321,
    store_path: str | Path = "derplace-store",
    ui_dir: str | Path | None = None,
    workers: int | None = None,
) -> None:
    """Run the service until interrupted."""
    server = make_server(host, port, store_path, ui_dir=ui_dir, workers=workers)
    print(f"derplace service on http://{host}:{server.server_port} (store: {store_path})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
