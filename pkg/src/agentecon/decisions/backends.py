"""Decision backends: heuristic rules, a chat-completion client, and record/replay.

Any backend failure degrades to a no-op action set plus a warning record;
the run always continues.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import requests

from .actions import ActionSet, noop, parse_actions
from .heuristic import HeuristicParams, heuristic_decide
from .prompt import PromptDocument, assemble_prompt
from .views import AgentView

log = logging.getLogger(__name__)


class BackendError(RuntimeError):
    pass


class Timeout(BackendError):
    pass


class TransportError(BackendError):
    pass


class AuthError(BackendError):
    pass


class ReplayMiss(BackendError):
    pass


@dataclass
class Decision:
    actions: ActionSet
    warnings: list[dict] = field(default_factory=list)
    raw: Optional[str] = None


@dataclass(frozen=True)
class ChatConfig:
    endpoint: str = ""
    model: str = ""
    token_env: str = "AGENTECON_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    backoff: float = 0.5
    temperature: float = 0.0
    record_path: Optional[str] = None
    replay_path: Optional[str] = None
    audit_path: Optional[str] = None

    @property
    def token(self) -> Optional[str]:
        return os.environ.get(self.token_env)


def _request_key(model: str, prompt: PromptDocument) -> str:
    blob = json.dumps({"model": model, "system": prompt.system, "user": prompt.user}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


class ReplayStore:
    """Line-delimited ``{"key", "n", "response"}`` records.

    ``n`` counts repeats of the same request key, so identical prompts
    replay their responses in the recorded order.
    """

    def __init__(self, path: str | Path, mode: str):
        if mode not in ("record", "replay"):
            raise ValueError("mode must be record or replay")
        self.path = Path(path)
        self.mode = mode
        self._seen: dict[str, int] = {}
        self._table: dict[tuple[str, int], str] = {}
        if mode == "replay":
            if not self.path.exists():
                raise FileNotFoundError(self.path)
            for line in self.path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self._table[(rec["key"], rec["n"])] = rec["response"]
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def _next(self, key: str) -> int:
        n = self._seen.get(key, 0)
        self._seen[key] = n + 1
        return n

    def lookup(self, key: str) -> str:
        n = self._next(key)
        try:
            return self._table[(key, n)]
        except KeyError:
            raise ReplayMiss(f"no recorded response for request {key[:12]} #{n}") from None

    def record(self, key: str, response: str) -> None:
        n = self._next(key)
        with self.path.open("a") as fh:
            fh.write(json.dumps({"key": key, "n": n, "response": response}, sort_keys=True) + "\n")


def _post(config: ChatConfig, body: dict, session) -> str:
    headers = {"Content-Type": "application/json"}
    token = config.token
    if token:
        headers["Authorization"] = f"Bearer {token}"
        headers["api-key"] = token
    last: Exception = TransportError("no attempt made")
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(config.backoff * 2 ** (attempt - 1))
        try:
            resp = session.post(config.endpoint, json=body, headers=headers, timeout=config.timeout)
        except requests.Timeout as exc:
            last = Timeout(f"request timed out after {config.timeout}s: {exc}")
            continue
        except requests.RequestException as exc:
            last = TransportError(str(exc))
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint refused credentials ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            last = TransportError(f"HTTP {resp.status_code}")
            continue
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc
    raise last


def llm_decide(config: ChatConfig, prompt: PromptDocument, session=None,
               store: Optional[ReplayStore] = None) -> str:
    """One chat-completion request for one prompt; returns the reply text.

    With a replay store no network call is made. With a record store the
    reply is appended after a successful call. Requests and replies go to
    ``config.audit_path`` when set.
    """
    key = _request_key(config.model, prompt)
    if store is not None and store.mode == "replay":
        return store.lookup(key)
    if not config.endpoint:
        raise TransportError("no endpoint configured")
    body = {"model": config.model, "temperature": config.temperature,
            "messages": [{"role": "system", "content": prompt.system},
                         {"role": "user", "content": prompt.user}]}
    session = session or requests.Session()
    started = time.monotonic()
    try:
        text = _post(config, body, session)
    except BackendError as exc:
        _audit(config, key, body, None, type(exc).__name__, time.monotonic() - started)
        raise
    _audit(config, key, body, text, None, time.monotonic() - started)
    if store is not None:
        store.record(key, text)
    return text


def _audit(config: ChatConfig, key: str, body: dict, response: Optional[str], error: Optional[str],
           seconds: float) -> None:
    if not config.audit_path:
        return
    rec = {"key": key, "request": body, "response": response, "error": error, "seconds": round(seconds, 3)}
    with open(config.audit_path, "a") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


class Backend:
    kind = "abstract"

    def decide(self, view: AgentView, rng: np.random.Generator) -> Decision:
        raise NotImplementedError


class HeuristicBackend(Backend):
    kind = "heuristic"

    def __init__(self, params: HeuristicParams = HeuristicParams()):
        self.params = params

    def decide(self, view: AgentView, rng: np.random.Generator) -> Decision:
        return Decision(heuristic_decide(view, view.role, rng, self.params))


class RemoteBackend(Backend):
    """Chat-model backend; ``kind`` is ``replay`` when it only reads a recording."""

    def __init__(self, config: ChatConfig, session=None, store: Optional[ReplayStore] = None):
        self.config = config
        self.session = session
        self.store: Optional[ReplayStore] = store
        if store is not None:
            pass
        elif config.replay_path:
            self.store = ReplayStore(config.replay_path, "replay")
        elif config.record_path:
            self.store = ReplayStore(config.record_path, "record")
        self.kind = "replay" if self.store is not None and self.store.mode == "replay" else "remote"

    def decide(self, view: AgentView, rng: np.random.Generator) -> Decision:
        prompt = assemble_prompt(view)
        try:
            raw = llm_decide(self.config, prompt, self.session, self.store)
        except BackendError as exc:
            log.warning("%s %d: backend failure %s", view.role, view.agent_id, exc)
            return Decision(noop(view.role, view.agent_id),
                            [{"kind": "backend-error", "role": view.role, "agent": view.agent_id,
                              "error": type(exc).__name__, "message": str(exc)}])
        parsed = parse_actions(raw, view.role, view.agent_id)
        warnings = [{"kind": "parse-error", "role": view.role, "agent": view.agent_id,
                     "error": e.kind, "function": e.function, "message": e.message} for e in parsed.errors]
        return Decision(parsed.actions, warnings, raw)
