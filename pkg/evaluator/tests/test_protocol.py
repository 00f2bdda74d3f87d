"""Wire-protocol behavior through a real served subprocess."""

import json
import subprocess
import sys

import pytest

from test_documents import cell_doc, doc

REQUEST_DOC = doc(
    [cell_doc(3, [(0, 1)])],
    stages=[{"base_channels": 16, "repeats": 1, "height": 32, "width": 32}],
)


@pytest.fixture
def server(data_dir):
    proc = subprocess.Popen(
        [sys.executable, "-m", "densewire_evaluator", "serve",
         "--data-dir", str(data_dir)],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
    )
    yield proc
    if proc.poll() is None:
        proc.kill()
    proc.wait()


def ask(proc, payload):
    line = payload if isinstance(payload, str) else json.dumps(payload)
    proc.stdin.write(line + "\n")
    proc.stdin.flush()
    reply = proc.stdout.readline()
    assert reply, "server closed the stream"
    return json.loads(reply)


def test_valid_request_scores(server):
    reply = ask(server, {
        "id": 1, "meta": REQUEST_DOC,
        "budget": {"epochs": 1, "data_fraction": 0.02},
    })
    assert reply["id"] == 1
    assert 0.0 <= reply["score"] <= 1.0


def test_replies_in_request_order(server):
    for rid in (3, 4):
        reply = ask(server, {
            "id": rid, "meta": REQUEST_DOC,
            "budget": {"epochs": 1, "data_fraction": 0.02},
        })
        assert reply["id"] == rid


def test_same_id_reproduces_the_score(server):
    req = {"id": 9, "meta": REQUEST_DOC,
           "budget": {"epochs": 1, "data_fraction": 0.02}}
    assert ask(server, req)["score"] == ask(server, req)["score"]


def test_malformed_json_gets_error_reply(server):
    reply = ask(server, "this is not json")
    assert reply["id"] == -1
    assert "error" in reply


def test_bad_meta_keeps_the_request_id(server):
    reply = ask(server, {"id": 7, "meta": {"version": 1}, "budget": {}})
    assert reply["id"] == 7
    assert "error" in reply
    # and the server keeps serving afterwards
    ok = ask(server, {
        "id": 8, "meta": REQUEST_DOC,
        "budget": {"epochs": 1, "data_fraction": 0.02},
    })
    assert ok["id"] == 8 and "score" in ok


def test_missing_meta_field_reports_error(server):
    reply = ask(server, {"id": 11, "budget": {}})
    assert reply["id"] == 11
    assert "meta" in reply["error"]


def test_unknown_fields_are_ignored(server):
    reply = ask(server, {
        "id": 2, "meta": REQUEST_DOC,
        "budget": {"epochs": 1, "data_fraction": 0.02, "verbosity": 3},
        "priority": "high",
    })
    assert reply["id"] == 2
    assert "score" in reply


def test_stream_close_exits_zero(server):
    server.stdin.close()
    assert server.wait(timeout=30) == 0
