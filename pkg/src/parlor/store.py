"""Session persistence.

The file store is a single append-only JSONL log. Turns accumulate per
session; session state and device profiles are latest-record-wins. A
partially written final record (crash mid-append) is truncated away on
open, so a restart always sees every turn that completed.
"""
from __future__ import annotations

import abc
import json
import logging
import threading
from pathlib import Path

log = logging.getLogger(__name__)


class Store(abc.ABC):
    """What the engine needs from persistence."""

    @abc.abstractmethod
    def append_turn(self, session_id: str, turn: dict) -> None: ...

    @abc.abstractmethod
    def turns(self, session_id: str) -> list[dict]: ...

    @abc.abstractmethod
    def save_session(self, session_id: str, state: dict) -> None: ...

    @abc.abstractmethod
    def load_session(self, session_id: str) -> dict | None: ...

    @abc.abstractmethod
    def list_sessions(self) -> list[str]: ...

    @abc.abstractmethod
    def delete_session(self, session_id: str) -> bool: ...

    @abc.abstractmethod
    def save_profile(self, device_id: str, profile: dict) -> None: ...

    @abc.abstractmethod
    def load_profile(self, device_id: str) -> dict | None: ...


class MemoryStore(Store):
    """Volatile store for tests and throwaway sessions."""

    def __init__(self) -> None:
        self._turns: dict[str, list[dict]] = {}
        self._sessions: dict[str, dict] = {}
        self._profiles: dict[str, dict] = {}
        self._lock = threading.Lock()

    def append_turn(self, session_id: str, turn: dict) -> None:
        with self._lock:
            self._turns.setdefault(session_id, []).append(dict(turn))

    def turns(self, session_id: str) -> list[dict]:
        with self._lock:
            return [dict(t) for t in self._turns.get(session_id, [])]

    def save_session(self, session_id: str, state: dict) -> None:
        with self._lock:
            self._sessions[session_id] = dict(state)

    def load_session(self, session_id: str) -> dict | None:
        with self._lock:
            state = self._sessions.get(session_id)
            return dict(state) if state is not None else None

    def list_sessions(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def delete_session(self, session_id: str) -> bool:
        with self._lock:
            existed = session_id in self._sessions
            self._sessions.pop(session_id, None)
            self._turns.pop(session_id, None)
            return existed

    def save_profile(self, device_id: str, profile: dict) -> None:
        with self._lock:
            self._profiles[device_id] = dict(profile)

    def load_profile(self, device_id: str) -> dict | None:
        with self._lock:
            profile = self._profiles.get(device_id)
            return dict(profile) if profile is not None else None


class FileStore(Store):
    """JSONL-backed store; every write is appended and flushed immediately."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._turns: dict[str, list[dict]] = {}
        self._sessions: dict[str, dict] = {}
        self._profiles: dict[str, dict] = {}
        self._replay()
        self._fh = self.path.open("a", encoding="utf-8")

    def _replay(self) -> None:
        if not self.path.exists():
            return
        raw = self.path.read_bytes()
        offset = 0
        good_end = 0
        lineno = 0
        while offset < len(raw):
            newline = raw.find(b"\n", offset)
            end = newline + 1 if newline != -1 else len(raw)
            chunk = raw[offset:end]
            lineno += 1
            stripped = chunk.strip()
            if stripped:
                try:
                    record = json.loads(stripped.decode("utf-8"))
                    if not isinstance(record, dict) or "kind" not in record:
                        raise ValueError("record is not an object with a kind")
                except (ValueError, UnicodeDecodeError) as exc:
                    if end >= len(raw):
                        # Torn final record from a crash mid-append.
                        log.warning("%s: truncating corrupt trailing record: %s", self.path, exc)
                        with self.path.open("r+b") as fh:
                            fh.truncate(good_end)
                        return
                    raise ValueError(f"{self.path}:{lineno}: corrupt record in store") from exc
                self._apply(record)
            good_end = end
            offset = end

    def _apply(self, record: dict) -> None:
        kind = record.get("kind")
        if kind == "turn":
            self._turns.setdefault(record["session_id"], []).append(record["turn"])
        elif kind == "session":
            self._sessions[record["session_id"]] = record["state"]
        elif kind == "session_deleted":
            self._sessions.pop(record["session_id"], None)
            self._turns.pop(record["session_id"], None)
        elif kind == "profile":
            self._profiles[record["device_id"]] = record["profile"]
        else:
            raise ValueError(f"unknown record kind {kind!r} in store")

    def _write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, ensure_ascii=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def append_turn(self, session_id: str, turn: dict) -> None:
        with self._lock:
            self._turns.setdefault(session_id, []).append(dict(turn))
            self._write({"kind": "turn", "session_id": session_id, "turn": turn})

    def turns(self, session_id: str) -> list[dict]:
        with self._lock:
            return [dict(t) for t in self._turns.get(session_id, [])]

    def save_session(self, session_id: str, state: dict) -> None:
        with self._lock:
            self._sessions[session_id] = dict(state)
            self._write({"kind": "session", "session_id": session_id, "state": state})

    def load_session(self, session_id: str) -> dict | None:
        with self._lock:
            state = self._sessions.get(session_id)
            return dict(state) if state is not None else None

    def list_sessions(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def delete_session(self, session_id: str) -> bool:
        with self._lock:
            existed = session_id in self._sessions
            self._sessions.pop(session_id, None)
            self._turns.pop(session_id, None)
            if existed:
                self._write({"kind": "session_deleted", "session_id": session_id})
            return existed

    def save_profile(self, device_id: str, profile: dict) -> None:
        with self._lock:
            self._profiles[device_id] = dict(profile)
            self._write({"kind": "profile", "device_id": device_id, "profile": profile})

    def load_profile(self, device_id: str) -> dict | None:
        with self._lock:
            profile = self._profiles.get(device_id)
            return dict(profile) if profile is not None else None
