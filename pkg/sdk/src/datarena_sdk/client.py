"""Typed wrappers over the arena HTTP JSON API."""

from __future__ import annotations

import time
from dataclasses import dataclass

import httpx


class ArenaAPIError(Exception):
    def __init__(self, status_code: int, body):
        self.status_code = status_code
        self.body = body
        super().__init__(f"HTTP {status_code}: {body}")


class PollTimeout(Exception):
    pass


@dataclass(frozen=True)
class ClientConfig:
    base_url: str
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class ArenaClient:
    def __init__(self, config: ClientConfig):
        self.config = config
        transport = httpx.HTTPTransport(retries=config.retries)
        self._http = httpx.Client(base_url=config.base_url.rstrip("/"),
                                  timeout=config.timeout,
                                  transport=transport)

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _get(self, path, **params):
        resp = self._http.get(path, params=params or None)
        if resp.status_code != 200:
            raise ArenaAPIError(resp.status_code, resp.json())
        return resp.json()

    def list_tasks(self) -> list:
        return self._get("/tasks")

    def fetch_task(self, task_id: str) -> dict:
        return self._get(f"/tasks/{task_id}")

    def leaderboard(self, task_id: str, division: str | None = None,
                    history: bool = False) -> dict:
        params = {"history": history}
        if division:
            params["division"] = division
        return self._get(f"/tasks/{task_id}/leaderboard", **params)

    def submit(self, task_id: str, payload: dict, division: str = "open",
               submitter: str = "anonymous", method_description: str = "",
               regeneration_artifact: dict | None = None) -> dict:
        """Post a submission. Returns the receipt; a validation rejection
        comes back as a terminal receipt with status "rejected" and the
        report attached rather than raising."""
        envelope = {"division": division, "payload": payload,
                    "submitter": submitter,
                    "method_description": method_description}
        if regeneration_artifact is not None:
            envelope["regeneration_artifact"] = regeneration_artifact
        resp = self._http.post(f"/tasks/{task_id}/submissions",
                               json=envelope)
        if resp.status_code == 422:
            return resp.json()  # {"status": "rejected", "report": ...}
        if resp.status_code != 200:
            raise ArenaAPIError(resp.status_code, resp.json())
        return resp.json()

    def submission(self, submission_id: str) -> dict:
        return self._get(f"/submissions/{submission_id}")

    def poll_score(self, receipt: dict, timeout: float = 60.0,
                   interval: float = 0.1) -> dict:
        """Block until the submission behind a receipt is scored; returns
        the full submission status including its ScoreRecords. A rejected
        receipt is already terminal and is returned unchanged."""
        if receipt.get("status") == "rejected":
            return receipt
        sid = receipt["submission_id"]
        deadline = time.monotonic() + timeout
        while True:
            status = self.submission(sid)
            if status["status"] == "scored":
                return status
            if time.monotonic() > deadline:
                raise PollTimeout(f"submission {sid} not scored "
                                  f"within {timeout}s")
            time.sleep(interval)
