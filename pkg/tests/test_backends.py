import numpy as np
import pytest

from agentecon.decisions.backends import (AuthError, ChatConfig, RemoteBackend, ReplayMiss, ReplayStore,
                                          TransportError, llm_decide)
from agentecon.decisions.prompt import PromptDocument
from agentecon.decisions.views import household_view

from stub_server import REPLY, ChatServer


@pytest.fixture
def server():
    s = ChatServer()
    yield s
    s.close()


PROMPT = PromptDocument("household", 1, "system text", "user text")


def test_healthy_endpoint_passes_reply_through(server):
    cfg = ChatConfig(endpoint=server.url, model="m", max_retries=0)
    assert llm_decide(cfg, PROMPT) == REPLY
    assert server.requests[0]["messages"][1]["content"] == "user text"


def test_timeout_degrades_to_noop_with_warning(world):
    slow = ChatServer(delay=1.0)
    try:
        backend = RemoteBackend(ChatConfig(endpoint=slow.url, model="m", timeout=0.2, max_retries=0))
        hh = world.households[min(world.households)]
        dec = backend.decide(household_view(world, hh), np.random.default_rng(0))
        assert len(dec.actions) == 0
        assert dec.warnings[0]["kind"] == "backend-error" and dec.warnings[0]["error"] == "Timeout"
    finally:
        slow.close()


def test_auth_failure_is_not_retried():
    s = ChatServer(status=401)
    try:
        with pytest.raises(AuthError):
            llm_decide(ChatConfig(endpoint=s.url, model="m", max_retries=3, backoff=0), PROMPT)
        assert len(s.requests) == 1
    finally:
        s.close()


def test_server_errors_retry_then_fail():
    s = ChatServer(status=503)
    try:
        with pytest.raises(TransportError):
            llm_decide(ChatConfig(endpoint=s.url, model="m", max_retries=2, backoff=0), PROMPT)
        assert len(s.requests) == 3
    finally:
        s.close()


def test_record_then_replay_without_network(server, tmp_path, world):
    path = tmp_path / "replay.jsonl"
    cfg = ChatConfig(endpoint=server.url, model="m", max_retries=0, record_path=str(path))
    recorder = RemoteBackend(cfg)
    views = [household_view(world, world.households[h]) for h in sorted(world.households)[:3]]
    live = [recorder.decide(v, np.random.default_rng(0)) for v in views]
    server.close()
    replayer = RemoteBackend(ChatConfig(endpoint="http://127.0.0.1:9/unused", model="m", replay_path=str(path)))
    assert replayer.kind == "replay"
    replayed = [replayer.decide(v, np.random.default_rng(0)) for v in views]
    assert [d.raw for d in replayed] == [d.raw for d in live]
    assert [d.actions for d in replayed] == [d.actions for d in live]


def test_replay_miss(tmp_path):
    path = tmp_path / "r.jsonl"
    path.write_text("")
    with pytest.raises(ReplayMiss):
        llm_decide(ChatConfig(model="m"), PROMPT, store=ReplayStore(path, "replay"))


def test_repeated_prompts_replay_in_order(tmp_path):
    path = tmp_path / "r.jsonl"
    rec = ReplayStore(path, "record")
    rec.record("k", "first")
    rec.record("k", "second")
    rep = ReplayStore(path, "replay")
    assert [rep.lookup("k"), rep.lookup("k")] == ["first", "second"]
