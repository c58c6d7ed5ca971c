"""Durable state behind the coding service.

Every mutation is appended to a JSONL event log and fsynced before the
caller sees an acknowledgment; a state snapshot is written every N events
so startup replays only the tail. Replay and the live path share one
apply function, which is what makes restart reproduce identical state.
Leases are deliberately in-memory only: after a crash they are simply
gone, which at worst hands an item out twice, never loses a submission.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from pathlib import Path
from typing import Callable, Mapping, Sequence

from ..codebook import (
    AnnotationFormatError,
    Decision,
    MessageAnnotation,
    annotation_from_row,
    annotation_to_row,
    category_from_label,
    validate_annotation,
)
from ..corpus import Corpus, corpus_from_dict
from ..errors import LessonMinerError
from ..reliability import (
    NoUnits,
    agreement_report,
    align_annotations,
    report_to_dict,
)

DEFAULT_LEASE_SECONDS = 900.0
DEFAULT_SNAPSHOT_INTERVAL = 100


class UnknownCorpus(LessonMinerError):
    code = "UnknownCorpus"


class UnknownFilteredSet(LessonMinerError):
    code = "UnknownFilteredSet"


class UnknownSession(LessonMinerError):
    code = "UnknownSession"


class UnknownCoder(LessonMinerError):
    code = "UnknownCoder"


class UnknownItem(LessonMinerError):
    code = "UnknownItem"


class EmptyRoster(LessonMinerError):
    code = "EmptyRoster"


class DoubleNeedsTwo(EmptyRoster):
    code = "DoubleNeedsTwo"


class MalformedDocument(LessonMinerError):
    code = "MalformedDocument"


class SessionClosed(LessonMinerError):
    code = "SessionClosed"


class LeaseLost(LessonMinerError):
    code = "LeaseLost"


class DuplicateSubmission(LessonMinerError):
    code = "DuplicateSubmission"


class ValidationFailed(LessonMinerError):
    code = "ValidationFailed"


class NotDoubleCoded(LessonMinerError):
    code = "NotDoubleCoded"


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_id(document: Mapping, prefix: str) -> str:
    digest = hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()
    return f"{prefix}{digest[:16]}"


def _fingerprint(payload: Mapping) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:32]


class CodingStore:
    """Event-sourced store for corpora, filtered sets, and coding sessions."""

    def __init__(
        self,
        data_dir: str | Path,
        clock: Callable[[], float] = time.time,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        snapshot_interval: int = DEFAULT_SNAPSHOT_INTERVAL,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self.lease_seconds = lease_seconds
        self.snapshot_interval = snapshot_interval
        self._lock = threading.RLock()
        self._log_path = self.data_dir / "events.jsonl"
        self._snapshot_path = self.data_dir / "snapshot.json"

        self._seq = 0
        self._corpora: dict[str, dict] = {}
        self._filtered: dict[str, dict] = {}
        self._sessions: dict[str, dict] = {}
        self._session_counter = 0
        # volatile lease state: {(session_id, task): expiry / holding coder};
        # never persisted, so a restart simply forgets outstanding leases
        self._leases: dict[tuple, float] = {}
        self._lease_holders: dict[tuple, str] = {}
        self._materialized: dict[str, Corpus] = {}

        self._replay()
        self._log = open(self._log_path, "a", encoding="utf-8")

    # ------------------------------------------------------------------ log

    def _replay(self):
        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
            self._seq = snap["seq"]
            self._corpora = snap["corpora"]
            self._filtered = snap["filtered"]
            self._sessions = snap["sessions"]
            self._session_counter = snap["session_counter"]
        if self._log_path.exists():
            with open(self._log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError:
                        # torn tail write from a crash; everything before it
                        # was fsynced and acknowledged, so stop here
                        break
                    if event["seq"] <= self._seq:
                        continue
                    self._apply(event)
                    self._seq = event["seq"]
        for corpus_id, document in self._corpora.items():
            self._materialized[corpus_id] = corpus_from_dict(document)

    def _append(self, event: dict):
        self._seq += 1
        event["seq"] = self._seq
        self._log.write(canonical_json(event) + "\n")
        self._log.flush()
        os.fsync(self._log.fileno())
        self._apply(event)
        if self.snapshot_interval and self._seq % self.snapshot_interval == 0:
            self._write_snapshot()

    def _write_snapshot(self):
        snap = {
            "seq": self._seq,
            "corpora": self._corpora,
            "filtered": self._filtered,
            "sessions": self._sessions,
            "session_counter": self._session_counter,
        }
        tmp = self._snapshot_path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(snap, fh, ensure_ascii=False, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._snapshot_path)

    def _apply(self, event: dict):
        kind = event["type"]
        if kind == "corpus_added":
            self._corpora[event["corpus_id"]] = event["document"]
            self._materialized[event["corpus_id"]] = corpus_from_dict(event["document"])
        elif kind == "filtered_added":
            self._filtered[event["key"]] = event["document"]
        elif kind == "session_created":
            session = event["session"]
            self._sessions[session["id"]] = session
            self._session_counter = max(
                self._session_counter, int(session["id"].split("-")[1])
            )
        elif kind == "annotation_submitted":
            session = self._sessions[event["session_id"]]
            session["completed"][event["task"]] = {
                "annotation_id": event["annotation_id"],
                "fingerprint": event["fingerprint"],
            }
            session["annotations"].append(event["row"])
        elif kind == "adjudication":
            self._sessions[event["session_id"]]["overrides"].update(event["overrides"])
        elif kind == "session_closed":
            self._sessions[event["session_id"]]["status"] = "closed"
        else:
            raise MalformedDocument("unknown event type", type=kind)

    def close(self):
        with self._lock:
            self._log.close()

    # ------------------------------------------------------------- documents

    def add_corpus(self, document: Mapping) -> str:
        with self._lock:
            try:
                corpus_from_dict(document)
            except (LessonMinerError, KeyError, TypeError, ValueError) as exc:
                raise MalformedDocument("corpus document rejected", reason=str(exc))
            document = json.loads(canonical_json(document))
            corpus_id = content_id(document, "c")
            if corpus_id not in self._corpora:
                self._append(
                    {"type": "corpus_added", "corpus_id": corpus_id, "document": document}
                )
            return corpus_id

    def add_filtered(self, corpus_id: str, document: Mapping) -> dict:
        with self._lock:
            corpus = self._corpus(corpus_id)
            try:
                list_name = document["keyword_list"]
                config_hash = document["config_hash"]
                for entry in document["transcripts"]:
                    transcript = corpus.transcript(entry["transcript_id"])
                    for seg in entry["segments"]:
                        if not 0 <= seg["index"] < len(transcript):
                            raise IndexError(seg["index"])
            except (KeyError, IndexError, TypeError) as exc:
                raise MalformedDocument(
                    "filtered document rejected", reason=repr(exc)
                )
            document = json.loads(canonical_json(document))
            key = f"{corpus_id}:{list_name}:{config_hash}"
            if key not in self._filtered:
                self._append(
                    {
                        "type": "filtered_added",
                        "key": key,
                        "corpus_id": corpus_id,
                        "document": document,
                    }
                )
            return {
                "corpus_id": corpus_id,
                "list_name": list_name,
                "config_hash": config_hash,
            }

    def _corpus(self, corpus_id: str) -> Corpus:
        if corpus_id not in self._corpora:
            raise UnknownCorpus("corpus not in store", corpus_id=corpus_id)
        return self._materialized[corpus_id]

    # -------------------------------------------------------------- sessions

    def create_session(
        self,
        corpus_id: str,
        list_name: str,
        config_hash: str,
        roster: Sequence[str],
        policy: Mapping | None = None,
        context_window: int = 1,
    ) -> dict:
        policy = dict(policy or {"kind": "single"})
        with self._lock:
            self._corpus(corpus_id)
            key = f"{corpus_id}:{list_name}:{config_hash}"
            if key not in self._filtered:
                raise UnknownFilteredSet(
                    "filtered set not in store",
                    corpus_id=corpus_id,
                    list_name=list_name,
                    config_hash=config_hash,
                )
            roster = list(roster)
            if not roster or len(set(roster)) != len(roster):
                raise EmptyRoster("roster must be nonempty and free of duplicates")
            kind = policy.get("kind")
            if kind not in ("single", "double"):
                raise MalformedDocument("unknown policy kind", kind=kind)
            overlap = float(policy.get("overlap_percent", 100.0))
            if kind == "double":
                if len(roster) != 2:
                    raise DoubleNeedsTwo(
                        "double policy compares exactly two coders",
                        roster_size=len(roster),
                    )
                if not 0.0 < overlap <= 100.0:
                    raise MalformedDocument(
                        "overlap_percent must lie in (0, 100]", overlap=overlap
                    )
            if context_window < 0:
                raise MalformedDocument("context_window must be nonnegative")

            items = []
            for entry in self._filtered[key]["transcripts"]:
                for seg in entry["segments"]:
                    items.append(
                        {
                            "id": f"i{len(items):05d}",
                            "transcript_id": entry["transcript_id"],
                            "focus": seg["index"],
                            "matched": list(seg["matched"]),
                        }
                    )

            assignments: dict[str, list[str]] = {coder: [] for coder in roster}
            if kind == "double":
                slice_size = math.ceil(len(items) * overlap / 100.0)
                for ordinal, item in enumerate(items):
                    if ordinal < slice_size:
                        for coder in roster:
                            assignments[coder].append(item["id"])
                    else:
                        assignments[roster[ordinal % 2]].append(item["id"])
            else:
                for coder in roster:
                    assignments[coder] = [item["id"] for item in items]

            self._session_counter += 1
            session = {
                "id": f"s-{self._session_counter:04d}",
                "corpus_id": corpus_id,
                "filtered_key": key,
                "roster": roster,
                "policy": {"kind": kind, "overlap_percent": overlap},
                "context_window": context_window,
                "status": "open",
                "items": items,
                "assignments": assignments,
                "completed": {},
                "annotations": [],
                "overrides": {},
            }
            self._append({"type": "session_created", "session": session})
            return self.session_view(session["id"])

    def _session(self, session_id: str) -> dict:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession("session not in store", session_id=session_id)
        return session

    def session_view(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            return {
                "id": session["id"],
                "corpus_id": session["corpus_id"],
                "filtered_key": session["filtered_key"],
                "roster": list(session["roster"]),
                "policy": dict(session["policy"]),
                "context_window": session["context_window"],
                "status": session["status"],
                "item_count": len(session["items"]),
            }

    def list_sessions(self) -> list[dict]:
        with self._lock:
            return [self.session_view(sid) for sid in sorted(self._sessions)]

    # ----------------------------------------------------------- item queue

    def _task_key(self, session: dict, item_id: str, coder: str) -> str:
        if session["policy"]["kind"] == "double":
            return f"{item_id}/{coder}"
        return item_id

    def _item(self, session: dict, item_id: str) -> dict:
        for item in session["items"]:
            if item["id"] == item_id:
                return item
        raise UnknownItem("item not in session", item_id=item_id)

    def _lease_active(self, session_id: str, key: str, now: float) -> bool:
        expiry = self._leases.get((session_id, key))
        return expiry is not None and expiry > now

    def next_item(self, session_id: str, coder: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session["status"] != "open":
                raise SessionClosed("session is closed", session_id=session_id)
            if coder not in session["roster"]:
                raise UnknownCoder("coder not on roster", coder=coder)
            now = self.clock()
            by_id = {item["id"]: item for item in session["items"]}
            for item_id in session["assignments"][coder]:
                task = self._task_key(session, item_id, coder)
                if task in session["completed"]:
                    continue
                if self._lease_active(session_id, task, now):
                    continue
                self._leases[(session_id, task)] = now + self.lease_seconds
                self._lease_holders[(session_id, task)] = coder
                return self._item_payload(session, by_id[item_id])
            return {"done": True}

    def _context_rows(self, transcript, focus: int, radius: int) -> list[dict]:
        lo = max(0, focus - radius)
        hi = min(len(transcript) - 1, focus + radius)
        return [
            {
                "index": i,
                "text": transcript.segments[i].text,
                "is_focus": i == focus,
            }
            for i in range(lo, hi + 1)
        ]

    def _item_payload(self, session: dict, item: dict) -> dict:
        corpus = self._corpus(session["corpus_id"])
        transcript = corpus.transcript(item["transcript_id"])
        return {
            "done": False,
            "item_id": item["id"],
            "transcript_id": item["transcript_id"],
            "focus_index": item["focus"],
            "matched": list(item["matched"]),
            "segment_count": len(transcript),
            "context": self._context_rows(transcript, item["focus"], session["context_window"]),
            "lease_seconds": self.lease_seconds,
        }

    def item_context(self, session_id: str, item_id: str, radius: int) -> dict:
        """Neighboring segments around one item's focus, any radius.

        Read-only: does not touch leases, so the UI can widen context on
        a leased item without disturbing the queue.
        """
        with self._lock:
            session = self._session(session_id)
            item = self._item(session, item_id)
            if radius < 0:
                raise ValidationFailed(
                    "radius must be nonnegative", violations=["InvalidRadius"]
                )
            corpus = self._corpus(session["corpus_id"])
            transcript = corpus.transcript(item["transcript_id"])
            return {
                "item_id": item["id"],
                "transcript_id": item["transcript_id"],
                "focus_index": item["focus"],
                "matched": list(item["matched"]),
                "segment_count": len(transcript),
                "context": self._context_rows(transcript, item["focus"], radius),
            }

    # ------------------------------------------------------------ annotation

    def submit_annotation(
        self,
        session_id: str,
        coder: str,
        item_id: str,
        decision: str,
        category: str | None = None,
        span: Mapping | None = None,
        note: str = "",
    ) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session["status"] != "open":
                raise SessionClosed("session is closed", session_id=session_id)
            if coder not in session["roster"]:
                raise UnknownCoder("coder not on roster", coder=coder)
            item = self._item(session, item_id)
            task = self._task_key(session, item_id, coder)
            payload = {
                "item_id": item_id,
                "coder": coder,
                "decision": decision,
                "category": category,
                "span": dict(span) if span else None,
                "note": note,
            }
            fingerprint = _fingerprint(payload)

            prior = session["completed"].get(task)
            if prior is not None:
                if prior["fingerprint"] == fingerprint:
                    return {
                        "annotation_id": prior["annotation_id"],
                        "status": "recorded",
                        "replay": True,
                    }
                raise DuplicateSubmission(
                    "item already completed with a different submission",
                    item_id=item_id,
                    annotation_id=prior["annotation_id"],
                )

            now = self.clock()
            expiry = self._leases.get((session_id, task))
            holder = self._lease_holders.get((session_id, task))
            if expiry is None or expiry <= now or holder != coder:
                raise LeaseLost(
                    "no active lease held by this coder",
                    item_id=item_id,
                    coder=coder,
                )

            annotation_id = f"{session_id}:{coder}:{item_id}"
            row = self._validated_row(
                session, item, annotation_id, coder, decision, category, span, note
            )
            self._append(
                {
                    "type": "annotation_submitted",
                    "session_id": session_id,
                    "task": task,
                    "annotation_id": annotation_id,
                    "fingerprint": fingerprint,
                    "row": row,
                }
            )
            self._leases.pop((session_id, task), None)
            self._lease_holders.pop((session_id, task), None)
            return {"annotation_id": annotation_id, "status": "recorded", "replay": False}

    def _validated_row(
        self,
        session: dict,
        item: dict,
        annotation_id: str,
        coder: str,
        decision: str,
        category: str | None,
        span: Mapping | None,
        note: str,
    ) -> dict:
        if decision == "message":
            if category is None:
                raise ValidationFailed(
                    "message decisions need a category",
                    violations=["MissingCategory"],
                )
            try:
                resolved = Decision.message(category_from_label(category))
            except AnnotationFormatError:
                raise ValidationFailed(
                    "unknown category label",
                    violations=["UnknownCategory"],
                    category=category,
                )
        elif decision == "not_a_message":
            resolved = Decision.not_a_message()
        else:
            raise ValidationFailed(
                "decision must be 'message' or 'not_a_message'",
                violations=["UnknownDecision"],
                decision=decision,
            )
        if span is None:
            start = end = item["focus"]
        else:
            try:
                start, end = int(span["start"]), int(span["end"])
            except (KeyError, TypeError, ValueError):
                raise ValidationFailed(
                    "span must carry integer start and end",
                    violations=["InvalidSpan"],
                )
        annotation = MessageAnnotation(
            id=annotation_id,
            coder_id=coder,
            transcript_id=item["transcript_id"],
            start=start,
            end=end,
            decision=resolved,
            note=note,
        )
        corpus = self._corpus(session["corpus_id"])
        report = validate_annotation(annotation, corpus.transcript(item["transcript_id"]))
        if not report.is_valid:
            raise ValidationFailed(
                "annotation rejected",
                violations=[v.code for v in report.violations],
            )
        return annotation_to_row(annotation)

    # ------------------------------------------------------------- reporting

    def progress(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            now = self.clock()
            per_coder = {}
            for coder in session["roster"]:
                assigned = session["assignments"][coder]
                completed = sum(
                    1
                    for item_id in assigned
                    if self._task_key(session, item_id, coder) in session["completed"]
                )
                leased = sum(
                    1
                    for item_id in assigned
                    if self._task_key(session, item_id, coder) not in session["completed"]
                    and self._lease_active(
                        session_id, self._task_key(session, item_id, coder), now
                    )
                    and self._lease_holders.get(
                        (session_id, self._task_key(session, item_id, coder))
                    )
                    == coder
                )
                per_coder[coder] = {
                    "assigned": len(assigned),
                    "completed": completed,
                    "leased": leased,
                }
            try:
                agreement = self.agreement(session_id)
            except (NotDoubleCoded, NoUnits):
                agreement = None
            return {
                "session_id": session_id,
                "status": session["status"],
                "item_count": len(session["items"]),
                "completed_tasks": len(session["completed"]),
                "per_coder": per_coder,
                "agreement": agreement,
            }

    def _rows_by_task(self, session: dict) -> dict[str, tuple[int, dict]]:
        task_of = {v["annotation_id"]: k for k, v in session["completed"].items()}
        return {
            task_of[row["annotation_id"]]: (ordinal, row)
            for ordinal, row in enumerate(session["annotations"])
        }

    def _shared_annotations(
        self, session: dict
    ) -> tuple[list[MessageAnnotation], list[MessageAnnotation]]:
        first, second = session["roster"]
        rows_by_task = self._rows_by_task(session)
        a, b = [], []
        for item in session["items"]:
            ta, tb = f"{item['id']}/{first}", f"{item['id']}/{second}"
            if ta in rows_by_task and tb in rows_by_task:
                for bucket, task in ((a, ta), (b, tb)):
                    ordinal, row = rows_by_task[task]
                    bucket.append(annotation_from_row(row, created_at=ordinal))
        return a, b

    def agreement(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session["policy"]["kind"] != "double":
                raise NotDoubleCoded(
                    "agreement needs a double-coded session", session_id=session_id
                )
            a, b = self._shared_annotations(session)
            if not a:
                raise NoUnits("no items completed by both coders")
            pairs = align_annotations(a, b)
            return report_to_dict(agreement_report(pairs))

    # ----------------------------------------------------------- adjudication

    def adjudicate(self, session_id: str, overrides: Mapping[str, str]) -> dict:
        with self._lock:
            session = self._session(session_id)
            for item_id, coder in overrides.items():
                self._item(session, item_id)
                if coder not in session["roster"]:
                    raise UnknownCoder("override names unknown coder", coder=coder)
            if overrides:
                self._append(
                    {
                        "type": "adjudication",
                        "session_id": session_id,
                        "overrides": dict(overrides),
                    }
                )
            return {"overrides": dict(session["overrides"])}

    def _adjudicated_rows(self, session: dict) -> list[dict]:
        """Primary coder wins per item unless overridden; messages only."""
        rows_by_task = {task: row for task, (_, row) in self._rows_by_task(session).items()}
        if session["policy"]["kind"] == "single":
            return [
                dict(row)
                for row in session["annotations"]
                if row["decision"] == "message"
            ]
        primary = session["roster"][0]
        out = []
        for item in session["items"]:
            winner = session["overrides"].get(item["id"])
            order = [winner] if winner else [primary] + [
                c for c in session["roster"] if c != primary
            ]
            for coder in order:
                row = rows_by_task.get(f"{item['id']}/{coder}")
                if row is not None:
                    if row["decision"] == "message":
                        out.append(dict(row))
                    break
        return out

    def export(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            return {
                "session_id": session_id,
                "status": session["status"],
                "policy": dict(session["policy"]),
                "annotations": [dict(row) for row in session["annotations"]],
                "adjudicated": self._adjudicated_rows(session),
            }

    def close_session(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session["status"] == "open":
                self._append({"type": "session_closed", "session_id": session_id})
            return self.session_view(session_id)
