"""Session persistence: log-structured JSON documents.

A session document stores the inputs (feeder hash, mode, sampling,
threshold, seed) plus the ordered event log; loading replays the log, so a
stored session always reproduces its heatmaps and core bit-exactly.  The
document can embed the feeder (standalone CLI files) or reference one held
in a store directory (the HTTP service).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

from .control import SamplingParams
from .feeder import Feeder, feeder_to_dict, parse_feeder, serialize_feeder
from .placement import Session, replay


class StoreError(ValueError):
    """Unknown id, hash mismatch, or corrupt document."""


def feeder_hash(f: Feeder) -> str:
    canonical = json.dumps(feeder_to_dict(f), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def session_to_doc(s: Session, include_feeder: bool = True) -> dict:
    doc = {
        "feeder_hash": feeder_hash(s.feeder),
        "mode": s.mode,
        "sampling": asdict(s.sampling),
        "threshold": s.threshold,
        "seed": s.seed,
        "events": list(s.history),
    }
    if include_feeder:
        doc["feeder"] = feeder_to_dict(s.feeder)
    return doc


def session_from_doc(doc: dict, feeder: Feeder | None = None) -> Session:
    """Rebuild a session by replay; verifies the feeder hash."""
    if feeder is None:
        if "feeder" not in doc:
            raise StoreError("session document embeds no feeder; pass one explicitly")
        feeder = parse_feeder(json.dumps(doc["feeder"]))
    if feeder_hash(feeder) != doc["feeder_hash"]:
        raise StoreError("feeder hash mismatch: session belongs to a different feeder")
    sampling = SamplingParams(**doc.get("sampling", {}))
    return replay(
        feeder,
        doc["mode"],
        list(doc.get("events", [])),
        sampling=sampling,
        threshold=doc.get("threshold", 0.07),
        seed=doc.get("seed", 0),
    )


def save_session_file(path: str | Path, s: Session) -> None:
    Path(path).write_text(json.dumps(session_to_doc(s), indent=2, sort_keys=True))


def load_session_file(path: str | Path, feeder: Feeder | None = None) -> Session:
    doc = json.loads(Path(path).read_text())
    return session_from_doc(doc, feeder)


class SessionStore:
    """Directory-backed store used by the HTTP service.

    Feeders are content-addressed by hash prefix; sessions hold a feeder
    reference plus their event log and are rewritten after every mutation.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "feeders").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)

    # -- feeders -----------------------------------------------------------

    def put_feeder(self, text: str) -> str:
        feeder = parse_feeder(text)
        fid = feeder_hash(feeder)[:12]
        path = self.root / "feeders" / f"{fid}.json"
        if not path.exists():
            path.write_text(serialize_feeder(feeder))
        return fid

    def get_feeder(self, fid: str) -> Feeder:
        path = self.root / "feeders" / f"{fid}.json"
        if not path.exists():
            raise StoreError(f"unknown feeder id {fid!r}")
        return parse_feeder(path.read_text())

    def list_feeders(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "feeders").glob("*.json"))

    # -- sessions ----------------------------------------------------------

    def _session_path(self, sid: str) -> Path:
        return self.root / "sessions" / f"{sid}.json"

    def save_session(self, sid: str, s: Session, feeder_id: str) -> None:
        doc = session_to_doc(s, include_feeder=False)
        doc["feeder_id"] = feeder_id
        self._session_path(sid).write_text(json.dumps(doc, indent=2, sort_keys=True))

    def load_session(self, sid: str) -> tuple[Session, str]:
        path = self._session_path(sid)
        if not path.exists():
            raise StoreError(f"unknown session id {sid!r}")
        doc = json.loads(path.read_text())
        feeder = self.get_feeder(doc["feeder_id"])
        return session_from_doc(doc, feeder), doc["feeder_id"]

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "sessions").glob("*.json"))
