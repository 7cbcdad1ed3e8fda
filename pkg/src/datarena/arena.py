"""Challenge service: task registry, submission intake, scoring, leaderboards.

All durable state lives in an append-only JSON-lines log under the data root,
next to the problem bundle directories. Restarting the service replays the
log, so leaderboards survive restarts bit-exactly. Submission intake and
score commits go through a single writer lock; scoring itself runs on a
background worker thread and commits results in arrival order.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .bundles import load_bundle, public_manifest, read_manifest, verify_bundle
from .errors import (
    DuplicateTaskId,
    MissingArtifact,
    UnknownSubmission,
    UnknownTask,
    ValidationFailed,
    WindowClosed,
    WrongTaskType,
)
from .evaluators import ScoreRecord, Submission, evaluate, validate
from .problems import TestSetProblem

LOG_NAME = "log.jsonl"
TASKS_DIR = "tasks"
TASK_CONFIG = "task.json"
DEFAULT_OPEN_AT = "1970-01-01T00:00:00+00:00"
DEFAULT_CLOSE_AT = "9999-12-31T23:59:59+00:00"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Task:
    task_id: str
    problem: object
    bundle_root: Path
    manifest: dict
    open_at: str
    close_at: str

    @property
    def benchmark_type(self) -> str:
        return self.problem.task_type

    @property
    def metric(self):
        return self.problem.metric

    def public_view(self) -> dict:
        name, direction = self.metric
        return {"task_id": self.task_id,
                "benchmark_type": self.benchmark_type,
                "metric_name": name,
                "metric_direction": direction,
                "open_at": self.open_at,
                "close_at": self.close_at,
                "manifest": public_manifest(self.manifest)}


class Arena:
    """In-process arena engine; the HTTP layer in :func:`create_app` is a
    thin shell over these methods."""

    def __init__(self, data_root, start_worker: bool = True):
        self.data_root = Path(data_root)
        self.data_root.mkdir(parents=True, exist_ok=True)
        self.tasks: dict[str, Task] = {}
        self._subs: dict[str, dict] = {}
        self._submissions: dict[str, Submission] = {}
        self._records: dict[str, list[ScoreRecord]] = {}
        self._verified: dict[str, bool] = {}
        self._lock = threading.RLock()
        self._queue: queue.Queue = queue.Queue()
        self._counter = 0
        self._scan_tasks()
        self._replay_log()
        self._worker = None
        if start_worker:
            self._worker = threading.Thread(target=self._work_loop, daemon=True)
            self._worker.start()

    # -- registry --------------------------------------------------------

    def _scan_tasks(self):
        tasks_dir = self.data_root / TASKS_DIR
        if not tasks_dir.is_dir():
            return
        for entry in sorted(tasks_dir.iterdir()):
            if entry.is_dir() and (entry / "manifest.json").exists():
                self.register_task(entry.name, entry)

    def register_task(self, task_id: str, bundle_root,
                      open_at: str | None = None,
                      close_at: str | None = None) -> str:
        with self._lock:
            if task_id in self.tasks:
                raise DuplicateTaskId(f"task {task_id!r} already registered")
            bundle_root = Path(bundle_root)
            verify_bundle(bundle_root)
            problem = load_bundle(bundle_root, verify=False)
            manifest = read_manifest(bundle_root)
            config_path = bundle_root / TASK_CONFIG
            config = (json.loads(config_path.read_text())
                      if config_path.exists() else {})
            open_at = open_at or config.get("open_at", DEFAULT_OPEN_AT)
            close_at = close_at or config.get("close_at", DEFAULT_CLOSE_AT)
            if close_at <= open_at:
                raise ValueError("close_at must be after open_at")
            self.tasks[task_id] = Task(task_id, problem, bundle_root,
                                       manifest, open_at, close_at)
            return task_id

    def task(self, task_id: str) -> Task:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise UnknownTask(f"no task {task_id!r}")

    # -- persistence -----------------------------------------------------

    @property
    def _log_path(self) -> Path:
        return self.data_root / LOG_NAME

    def _append(self, event: dict):
        with self._log_path.open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay_log(self):
        if not self._log_path.exists():
            return
        pending = []
        with self._log_path.open() as fh:
            for line in fh:
                event = json.loads(line)
                kind = event["event"]
                if kind == "submission":
                    sid = event["submission_id"]
                    self._subs[sid] = {k: event[k] for k in
                                       ("submission_id", "task_id",
                                        "submitted_at", "status")}
                    self._submissions[sid] = Submission.from_dict(
                        event["submission"])
                    self._counter = max(self._counter,
                                        int(sid.split("-")[1]))
                    pending.append(sid)
                elif kind == "scores":
                    sid = event["submission_id"]
                    self._records[sid] = [ScoreRecord.from_dict(r)
                                          for r in event["records"]]
                    self._subs[sid]["status"] = "scored"
                    if sid in pending:
                        pending.remove(sid)
                elif kind == "verification":
                    self._verified[event["submission_id"]] = event["verified"]
        for sid in pending:
            self._queue.put(sid)

    # -- intake ----------------------------------------------------------

    def submit(self, task_id: str, envelope: dict,
               now: str | None = None) -> dict:
        task = self.task(task_id)
        now = now or utc_now()
        if not (task.open_at <= now < task.close_at):
            raise WindowClosed(
                f"window for {task_id!r} is {task.open_at}..{task.close_at}")
        submission = Submission.from_dict(dict(envelope, task_id=task_id))
        report = validate(submission, task.problem)
        if not report.ok:
            raise ValidationFailed(report)
        with self._lock:
            self._counter += 1
            sid = f"sub-{self._counter:06d}"
            self._subs[sid] = {"submission_id": sid, "task_id": task_id,
                               "submitted_at": now, "status": "queued"}
            self._submissions[sid] = submission
            self._append({"event": "submission", "submission_id": sid,
                          "task_id": task_id, "submitted_at": now,
                          "status": "queued",
                          "submission": submission.to_dict()})
        self._queue.put(sid)
        return {"submission_id": sid, "status": "queued"}

    # -- scoring ---------------------------------------------------------

    def _work_loop(self):
        while True:
            sid = self._queue.get()
            try:
                self._score(sid)
            finally:
                self._queue.task_done()

    def drain(self):
        """Block until every queued submission has been scored."""
        self._queue.join()

    def _score(self, sid: str):
        task = self.task(self._subs[sid]["task_id"])
        if isinstance(task.problem, TestSetProblem):
            self.rescore_test_set(task.task_id)
            return
        records = evaluate(task.problem, self._submissions[sid],
                           submission_id=sid)
        self._commit_scores(sid, records)

    def _commit_scores(self, sid: str, records: list[ScoreRecord]):
        with self._lock:
            self._records[sid] = records
            self._subs[sid]["status"] = "scored"
            self._append({"event": "scores", "submission_id": sid,
                          "records": [r.to_dict() for r in records]})

    def _task_submission_ids(self, task_id: str) -> list[str]:
        return sorted(sid for sid, meta in self._subs.items()
                      if meta["task_id"] == task_id)

    def rescore_test_set(self, task_id: str):
        """Recompute containment counts over every accepted submission and
        re-score all of them; triggered on each accepted test-set intake."""
        task = self.task(task_id)
        if not isinstance(task.problem, TestSetProblem):
            raise WrongTaskType(f"{task_id!r} is {task.benchmark_type}, "
                                "not test_set")
        with self._lock:
            sids = self._task_submission_ids(task_id)
            counts: dict[str, int] = {}
            for sid in sids:
                seen = {ex["example_id"]
                        for ex in self._submissions[sid].payload["examples"]}
                for eid in seen:
                    counts[eid] = counts.get(eid, 0) + 1
            for sid in sids:
                records = evaluate(task.problem, self._submissions[sid],
                                   containment_counts=counts,
                                   submission_id=sid)
                self._commit_scores(sid, records)

    # -- verification ----------------------------------------------------

    def verify_closed(self, submission_id: str,
                      output_hash: str | None = None) -> dict:
        try:
            submission = self._submissions[submission_id]
        except KeyError:
            raise UnknownSubmission(f"no submission {submission_id!r}")
        if submission.division != "closed":
            return {"submission_id": submission_id, "applicable": False}
        artifact = submission.regeneration_artifact
        if output_hash is None:
            if not artifact or "output_hash" not in artifact:
                raise MissingArtifact(
                    "closed submission lacks a regeneration artifact")
            output_hash = artifact["output_hash"]
        verified = output_hash == submission.payload_hash
        with self._lock:
            self._verified[submission_id] = verified
            self._append({"event": "verification",
                          "submission_id": submission_id,
                          "verified": verified})
        return {"submission_id": submission_id, "applicable": True,
                "verified": verified}

    # -- queries ---------------------------------------------------------

    def submission_status(self, sid: str) -> dict:
        try:
            meta = self._subs[sid]
        except KeyError:
            raise UnknownSubmission(f"no submission {sid!r}")
        submission = self._submissions[sid]
        out = {"submission_id": sid, "task_id": meta["task_id"],
               "submitter": submission.submitter,
               "division": submission.division,
               "submitted_at": meta["submitted_at"],
               "status": meta["status"],
               "records": [r.to_dict() for r in self._records.get(sid, [])]}
        if sid in self._verified:
            out["verified"] = self._verified[sid]
        return out

    def leaderboard(self, task_id: str, division: str | None = None,
                    history: bool = False) -> dict:
        task = self.task(task_id)
        metric_name, direction = task.metric
        entries = []
        with self._lock:
            for sid in self._task_submission_ids(task_id):
                if self._subs[sid]["status"] != "scored":
                    continue
                submission = self._submissions[sid]
                if division and submission.division != division:
                    continue
                if (submission.division == "closed"
                        and not self._verified.get(sid, False)):
                    continue
                records = self._records[sid]
                value = next(r.value for r in records if not r.concealed)
                concealed = next((r.value for r in records if r.concealed),
                                 None)
                entries.append({
                    "submission_id": sid,
                    "submitter": submission.submitter,
                    "division": submission.division,
                    "value": value,
                    "display_value": round(value, 4),
                    "concealed_value": concealed,
                    "verified": self._verified.get(sid, False),
                    "submitted_at": self._subs[sid]["submitted_at"],
                })
        sign = -1.0 if direction == "max" else 1.0
        entries.sort(key=lambda e: (sign * e["value"], e["submitted_at"],
                                    e["submission_id"]))
        if not history:
            best, seen = [], set()
            for entry in entries:
                if entry["submitter"] not in seen:
                    seen.add(entry["submitter"])
                    best.append(entry)
            entries = best
        return {"task_id": task_id, "metric_name": metric_name,
                "direction": direction, "entries": entries}


# -- HTTP layer ---------------------------------------------------------------

def create_app(arena: Arena):
    app = FastAPI(title="datarena")
    app.state.arena = arena

    def error(status: int, exc: Exception):
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__,
                                     "detail": str(exc)})

    @app.get("/tasks")
    def list_tasks():
        return [t.public_view() for _, t in sorted(arena.tasks.items())]

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            return arena.task(task_id).public_view()
        except UnknownTask as exc:
            return error(404, exc)

    @app.post("/tasks/{task_id}/submissions")
    async def post_submission(task_id: str, request: Request):
        envelope = await request.json()
        try:
            return arena.submit(task_id, envelope)
        except UnknownTask as exc:
            return error(404, exc)
        except WindowClosed as exc:
            return error(403, exc)
        except ValidationFailed as exc:
            return JSONResponse(status_code=422,
                                content={"status": "rejected",
                                         "report": exc.report.to_dict()})
        except Exception as exc:
            return error(400, exc)

    @app.get("/submissions/{sid}")
    def get_submission(sid: str):
        try:
            return arena.submission_status(sid)
        except UnknownSubmission as exc:
            return error(404, exc)

    @app.get("/tasks/{task_id}/leaderboard")
    def get_leaderboard(task_id: str, division: str | None = None,
                        history: bool = False):
        try:
            return arena.leaderboard(task_id, division, history)
        except UnknownTask as exc:
            return error(404, exc)

    @app.post("/tasks/{task_id}/verify")
    async def post_verify(task_id: str, request: Request):
        body = await request.json()
        try:
            arena.task(task_id)
            return arena.verify_closed(body["submission_id"],
                                       body.get("output_hash"))
        except UnknownTask as exc:
            return error(404, exc)
        except (UnknownSubmission, KeyError) as exc:
            return error(404, exc)
        except MissingArtifact as exc:
            return error(409, exc)

    return app
