"""HTTP service for the principle-verification workflow.

Serves review tasks over a completed pipeline run (stage >= principled).
Each conversation gets one task per annotator slot (the quorum, default 3);
an annotator claims a task (open -> in_progress, lease-bound), fetches the
conversation plus merged bank, and submits one atomic decision batch.
Submissions append to a per-conversation NDJSON file; when the quorum is
reached, the majority-consensus record is applied to the merged bank and
appended to the applied decision log that judging replays.

The store is plain files under the run directory: no database, fully
reproducible, and every mutation is serialized per task.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from . import principles
from .errors import StateError, ValidationError
from .gateway import DEFAULT_SCRUB_KEYS, scrub

logger = logging.getLogger(__name__)

API_PREFIX = "/api/v1"
DEFAULT_QUORUM = 3
DEFAULT_LEASE_S = 1800.0
TOKEN_ENV = "FLAMEWARD_TOKEN"

STATE_OPEN = "open"
STATE_IN_PROGRESS = "in_progress"
STATE_SUBMITTED = "submitted"


class DecisionIn(BaseModel):
    action: str
    principle_id: str | None = None
    new_text: str | None = None
    merged_from: list[str] = Field(default_factory=list)
    confidence: int


class SubmissionIn(BaseModel):
    annotator_id: str
    decisions: list[DecisionIn]
    completed_at: str = ""


class ClaimIn(BaseModel):
    annotator_id: str


class ReviewStore:
    """File-backed task and decision storage over one pipeline run."""

    def __init__(self, out_dir: str | Path, quorum: int = DEFAULT_QUORUM,
                 lease_s: float = DEFAULT_LEASE_S):
        self.out_dir = Path(out_dir)
        self.quorum = quorum
        self.lease_s = lease_s
        self.principled = self.out_dir / "stages" / "principled"
        self.extracted = self.out_dir / "stages" / "extracted"
        self.review_dir = self.out_dir / "review"
        self.review_dir.mkdir(parents=True, exist_ok=True)
        self._store_lock = threading.Lock()
        self._task_locks: dict[str, threading.Lock] = {}
        if not self.principled.exists():
            raise FileNotFoundError(
                f"{self.out_dir} has no principled stage; run the pipeline first"
            )
        self._init_tasks()

    # -- task bookkeeping -------------------------------------------------

    def _tasks_path(self) -> Path:
        return self.review_dir / "tasks.json"

    def conversations(self) -> list[str]:
        return sorted(f.name.removesuffix(".bank.json")
                      for f in self.principled.glob("*.bank.json"))

    def _init_tasks(self) -> None:
        with self._store_lock:
            if self._tasks_path().exists():
                return
            tasks = {}
            for conv in self.conversations():
                for slot in range(1, self.quorum + 1):
                    task_id = f"{conv}--a{slot}"
                    tasks[task_id] = {
                        "task_id": task_id,
                        "conversation_id": conv,
                        "annotator": None,
                        "state": STATE_OPEN,
                        "lease_expires": 0.0,
                    }
            self._write_tasks(tasks)

    def _read_tasks(self) -> dict:
        return json.loads(self._tasks_path().read_text(encoding="utf-8"))

    def _write_tasks(self, tasks: dict) -> None:
        tmp = self._tasks_path().with_suffix(".tmp")
        tmp.write_text(json.dumps(tasks, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, self._tasks_path())

    def _lock_for(self, task_id: str) -> threading.Lock:
        with self._store_lock:
            return self._task_locks.setdefault(task_id, threading.Lock())

    def list_tasks(self, state: str | None, limit: int, offset: int) -> tuple[list[dict], int]:
        tasks = self._read_tasks()
        rows = [self._present(t) for _, t in sorted(tasks.items())]
        if state:
            rows = [t for t in rows if t["state"] == state]
        return rows[offset : offset + limit], len(rows)

    def _present(self, task: dict) -> dict:
        shown = dict(task)
        if task["state"] == STATE_IN_PROGRESS and task["lease_expires"] < time.time():
            shown["state"] = STATE_OPEN  # lease expired; claimable again
        return shown

    def get_task(self, task_id: str) -> dict:
        tasks = self._read_tasks()
        if task_id not in tasks:
            raise KeyError(task_id)
        return self._present(tasks[task_id])

    def claim(self, task_id: str, annotator_id: str) -> dict:
        with self._lock_for(task_id):
            tasks = self._read_tasks()
            if task_id not in tasks:
                raise KeyError(task_id)
            task = tasks[task_id]
            now = time.time()
            if task["state"] == STATE_SUBMITTED:
                raise StateError(f"task {task_id} already submitted")
            if (
                task["state"] == STATE_IN_PROGRESS
                and task["lease_expires"] > now
                and task["annotator"] != annotator_id
            ):
                raise StateError(f"task {task_id} is leased to another annotator")
            task["state"] = STATE_IN_PROGRESS
            task["annotator"] = annotator_id
            task["lease_expires"] = now + self.lease_s
            self._write_tasks(tasks)
            return dict(task)

    # -- bank and conversation payloads ------------------------------------

    def merged_bank(self, conv: str) -> principles.PrincipleBank:
        path = self.principled / f"{conv}.bank.json"
        if not path.exists():
            raise KeyError(conv)
        return principles.bank_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def conversation_doc(self, conv: str) -> dict:
        path = self.extracted / f"{conv}.json"
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {}

    def _submissions_path(self, conv: str) -> Path:
        return self.review_dir / f"{conv}.submissions.ndjson"

    def _applied_log_path(self, conv: str) -> Path:
        return self.principled / f"{conv}.decisions.ndjson"

    def submissions(self, conv: str) -> list[principles.VerificationRecord]:
        path = self._submissions_path(conv)
        if not path.exists():
            return []
        return [
            principles.record_from_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def submitted_record(self, task_id: str) -> dict | None:
        tasks = self._read_tasks()
        task = tasks.get(task_id)
        if not task or task["state"] != STATE_SUBMITTED:
            return None
        for rec in self.submissions(task["conversation_id"]):
            if rec.annotator_id == task["annotator"]:
                return principles.record_to_dict(rec)
        return None

    def judging_ready(self, conv: str) -> dict:
        applied = self._applied_log_path(conv)
        resolved = applied.exists() and applied.read_text(encoding="utf-8").strip() != ""
        return {
            "conversation_id": conv,
            "submissions": len(self.submissions(conv)),
            "quorum": self.quorum,
            "judging_ready": resolved,
        }

    # -- submission ---------------------------------------------------------

    def submit(self, task_id: str, submission: SubmissionIn) -> dict:
        """Atomically apply one annotator's batch to a task.

        Validates the whole batch against the merged bank before anything is
        persisted; a concurrent second submission to the same task loses
        with a state conflict. Reaching the quorum resolves the majority
        consensus and appends it to the applied decision log.
        """
        record = principles.VerificationRecord(
            annotator_id=submission.annotator_id,
            decisions=tuple(
                principles.Decision(
                    action=d.action,
                    principle_id=d.principle_id,
                    new_text=d.new_text,
                    merged_from=tuple(d.merged_from),
                    confidence=d.confidence,
                )
                for d in submission.decisions
            ),
            completed_at=submission.completed_at or time.strftime(
                "%Y-%m-%dT%H:%M:%SZ", time.gmtime()
            ),
        )

        with self._lock_for(task_id):
            tasks = self._read_tasks()
            if task_id not in tasks:
                raise KeyError(task_id)
            task = tasks[task_id]
            if task["state"] == STATE_SUBMITTED:
                raise StateError(f"task {task_id} already submitted")
            conv = task["conversation_id"]

            bank = self.merged_bank(conv)
            if not principles.is_complete(bank, list(record.decisions)):
                raise ValidationError(
                    "batch incomplete: every active principle needs a decision"
                )
            principles.apply_verification(bank, record)  # dry-run: all-or-nothing

            with open(self._submissions_path(conv), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(principles.record_to_dict(record), sort_keys=True) + "\n")
            task["state"] = STATE_SUBMITTED
            task["annotator"] = record.annotator_id
            self._write_tasks(tasks)

        self._maybe_resolve(conv)
        return principles.record_to_dict(record)

    def _maybe_resolve(self, conv: str) -> None:
        with self._store_lock:
            records = self.submissions(conv)
            if len(records) < self.quorum:
                return
            applied_path = self._applied_log_path(conv)
            if applied_path.exists() and applied_path.read_text(encoding="utf-8").strip():
                return
            bank = self.merged_bank(conv)
            consensus = principles.resolve_majority(bank, records)
            principles.apply_verification(bank, consensus)  # validate before logging
            with open(applied_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(principles.record_to_dict(consensus), sort_keys=True) + "\n")
            logger.info("conversation %s resolved with %d submissions", conv, len(records))


def create_app(out_dir: str | Path, quorum: int = DEFAULT_QUORUM,
               lease_s: float = DEFAULT_LEASE_S) -> FastAPI:
    store = ReviewStore(out_dir, quorum=quorum, lease_s=lease_s)
    app = FastAPI(title="flameward review service")
    app.state.store = store

    def auth(request: Request) -> None:
        token = os.environ.get(TOKEN_ENV)
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid token")

    scrub_keys = tuple(k.lower() for k in DEFAULT_SCRUB_KEYS)

    def clean(payload):
        return scrub(payload, scrub_keys, ())

    @app.get(API_PREFIX + "/health")
    def health():
        return {"status": "ok"}

    @app.get(API_PREFIX + "/tasks", dependencies=[Depends(auth)])
    def list_tasks(state: str | None = None, limit: int = 50, offset: int = 0):
        rows, total = store.list_tasks(state, limit, offset)
        return {"tasks": clean(rows), "total": total, "limit": limit, "offset": offset}

    @app.get(API_PREFIX + "/tasks/{task_id}", dependencies=[Depends(auth)])
    def get_task(task_id: str):
        try:
            task = store.get_task(task_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id}")
        conv = task["conversation_id"]
        payload = {
            "task": task,
            "conversation": store.conversation_doc(conv),
            "bank": principles.bank_to_dict(store.merged_bank(conv)),
            "submitted_record": store.submitted_record(task_id),
        }
        return clean(payload)

    @app.post(API_PREFIX + "/tasks/{task_id}/claim", dependencies=[Depends(auth)])
    def claim_task(task_id: str, body: ClaimIn):
        try:
            task = store.claim(task_id, body.annotator_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id}")
        except StateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"task": clean(task)}

    @app.post(API_PREFIX + "/tasks/{task_id}/decisions", dependencies=[Depends(auth)])
    def submit_decisions(task_id: str, body: SubmissionIn):
        diagnostics = _validate_submission(body)
        if diagnostics:
            raise HTTPException(status_code=422, detail=diagnostics)
        try:
            record = store.submit(task_id, body)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id}")
        except StateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValidationError as exc:
            detail = [{"index": exc.decision_index, "error": str(exc)}]
            raise HTTPException(status_code=422, detail=detail)
        return {"applied": True, "record": clean(record)}

    @app.get(API_PREFIX + "/conversations/{conv}/status", dependencies=[Depends(auth)])
    def conversation_status(conv: str):
        if conv not in store.conversations():
            raise HTTPException(status_code=404, detail=f"unknown conversation {conv}")
        return store.judging_ready(conv)

    return app


def _validate_submission(body: SubmissionIn) -> list[dict]:
    """Field-level pre-checks with per-decision diagnostics."""
    diagnostics = []
    if not body.annotator_id:
        diagnostics.append({"index": None, "error": "annotator_id required", "field": "annotator_id"})
    for i, d in enumerate(body.decisions):
        if d.action not in principles.ACTIONS:
            diagnostics.append(
                {"index": i, "error": f"unknown action {d.action!r}", "field": f"decisions[{i}].action"}
            )
        if d.confidence not in principles.CONFIDENCE_LEVELS:
            diagnostics.append(
                {
                    "index": i,
                    "error": f"confidence {d.confidence} not in {{1, 2, 3}}",
                    "field": f"decisions[{i}].confidence",
                }
            )
    return diagnostics
