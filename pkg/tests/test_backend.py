import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from conftest import FIXTURES

from dialogforge.backend import (
    EchoBackend,
    GoldReplayBackend,
    HttpBackend,
    make_backend,
)
from dialogforge.errors import (
    BackendHTTPError,
    BackendProtocolError,
    BackendTransportError,
    ValidationError,
)

PROTOCOL = FIXTURES / "protocol"


def load_cases():
    return json.loads((PROTOCOL / "cases.json").read_text("utf-8"))


class TestEcho:
    def test_roundtrip(self):
        backend = EchoBackend()
        assert backend.generate("nlu", ["a", "b"], 8) == ["a", "b"]

    def test_health(self):
        assert EchoBackend().health()["status"] == "ok"

    def test_bad_task(self):
        with pytest.raises(ValidationError):
            EchoBackend().generate("translate", ["x"], 8)


class TestGoldReplay:
    def backend(self):
        return GoldReplayBackend.from_files([PROTOCOL / "gold_samples.jsonl"])

    def test_hit(self):
        out = self.backend().generate("nlu", ["[PATIENT] 我头痛"], 64)
        assert out == ["Informing | Symptom | 头痛"]

    def test_miss_yields_empty(self):
        assert self.backend().generate("nlu", ["no such input"], 64) == [""]

    def test_count_preserved(self):
        outs = self.backend().generate("nlg", ["x", "y", "z"], 8)
        assert len(outs) == 3


class TestConformanceFixtures:
    """The shared protocol fixture suite, run against the in-process backends.

    Wire-only cases (malformed bodies and such) are exercised against the
    reference HTTP server, which reuses this same fixture file.
    """

    @pytest.mark.parametrize("mode", ["echo", "gold"])
    def test_cases(self, mode):
        spec = load_cases()
        backend = (
            EchoBackend()
            if mode == "echo"
            else GoldReplayBackend.from_files([PROTOCOL / spec["gold_file"]])
        )
        ran = 0
        for case in spec["cases"]:
            if mode not in case["modes"] or case.get("wire_only"):
                continue
            request = case["request"]
            expect = case["expect"]
            if request["path"] == "/v1/health":
                health = backend.health()
                assert health["status"] == expect["health_status"]
                assert "model" in health
            else:
                body = request["body"]
                outputs = backend.generate(
                    body["task"], body["inputs"], body["max_new_tokens"]
                )
                if "outputs" in expect:
                    assert outputs == expect["outputs"]
                if "output_count" in expect:
                    assert len(outputs) == expect["output_count"]
            ran += 1
        assert ran >= 3


# ---------------------------------------------------------------------------
# HTTP client against a local stub


class _StubHandler(BaseHTTPRequestHandler):
    behavior = "ok"

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/v1/health":
            self._send(200, {"status": "ok", "model": "stub"})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        if self.behavior == "http500":
            self._send(500, {"error": "boom"})
        elif self.behavior == "missing-outputs":
            self._send(200, {"unexpected": True})
        elif self.behavior == "short-outputs":
            self._send(200, {"outputs": payload["inputs"][:-1]})
        else:
            self._send(200, {"outputs": [s.upper() for s in payload["inputs"]]})

    def _send(self, status, body):
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture()
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join()


class TestHttpBackend:
    def test_generate_and_health(self, stub_server):
        _StubHandler.behavior = "ok"
        backend = HttpBackend(stub_server)
        assert backend.health()["model"] == "stub"
        assert backend.generate("nlu", ["ab"], 8) == ["AB"]

    def test_non_200(self, stub_server):
        _StubHandler.behavior = "http500"
        with pytest.raises(BackendHTTPError) as exc:
            HttpBackend(stub_server).generate("nlu", ["x"], 8)
        assert exc.value.status == 500

    def test_malformed_response(self, stub_server):
        _StubHandler.behavior = "missing-outputs"
        with pytest.raises(BackendProtocolError):
            HttpBackend(stub_server).generate("nlu", ["x"], 8)

    def test_output_count_mismatch(self, stub_server):
        _StubHandler.behavior = "short-outputs"
        with pytest.raises(BackendProtocolError, match="expected 2"):
            HttpBackend(stub_server).generate("nlu", ["x", "y"], 8)

    def test_transport_error_names_url(self):
        backend = HttpBackend("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(BackendTransportError, match="127.0.0.1:1"):
            backend.generate("nlu", ["x"], 8)


class TestFactory:
    def test_specs(self):
        assert isinstance(make_backend("echo"), EchoBackend)
        gold = make_backend(f"gold:{PROTOCOL / 'gold_samples.jsonl'}")
        assert isinstance(gold, GoldReplayBackend)
        assert isinstance(make_backend("http://x.test"), HttpBackend)
        with pytest.raises(ValidationError):
            make_backend("quantum")
