"""Generation-backend clients speaking the wire protocol.

Wire contract (bit-exact): POST {backend_url}/v1/generate with
``{"task": "nlu"|"dpl"|"nlg", "inputs": [...], "max_new_tokens": int}``
returning ``{"outputs": [...]}``; GET /v1/health returns
``{"status": "ok", "model": <string>}``.

Echo and gold-replay backends are built in and run in-process, so the
pipeline and its tests need no network or model server.
"""

from __future__ import annotations

from pathlib import Path

import requests

from dialogforge.errors import (
    BackendHTTPError,
    BackendProtocolError,
    BackendTransportError,
    ValidationError,
)
from dialogforge.serde import load_samples

WIRE_TASKS = ("nlu", "dpl", "nlg")


class EchoBackend:
    """Returns every input verbatim."""

    name = "echo"

    def health(self) -> dict:
        return {"status": "ok", "model": "echo"}

    def generate(self, task: str, inputs: list[str], max_new_tokens: int) -> list[str]:
        _check_task(task)
        return list(inputs)


class GoldReplayBackend:
    """Answers with the gold target keyed by (task, input); misses yield ""."""

    name = "gold-replay"

    def __init__(self, index: dict[tuple[str, str], str]):
        self._index = index

    @classmethod
    def from_files(cls, paths) -> "GoldReplayBackend":
        index: dict[tuple[str, str], str] = {}
        for path in paths:
            for sample in load_samples(Path(path)):
                index[(sample.task.value.lower(), sample.input_seq)] = sample.target_seq
        return cls(index)

    def health(self) -> dict:
        return {"status": "ok", "model": "gold-replay"}

    def generate(self, task: str, inputs: list[str], max_new_tokens: int) -> list[str]:
        _check_task(task)
        return [self._index.get((task, text), "") for text in inputs]


class HttpBackend:
    """Client for a live server implementing the wire protocol."""

    name = "http"

    def __init__(self, url: str, timeout: float = 30.0, max_retries: int = 0):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries

    def health(self) -> dict:
        try:
            resp = requests.get(f"{self.url}/v1/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendTransportError(f"cannot reach backend at {self.url}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendHTTPError(
                f"health check failed with HTTP {resp.status_code}", resp.status_code
            )
        return resp.json()

    def generate(self, task: str, inputs: list[str], max_new_tokens: int) -> list[str]:
        _check_task(task)
        payload = {"task": task, "inputs": list(inputs), "max_new_tokens": max_new_tokens}
        last_exc: Exception | None = None
        # generate is idempotent for deterministic backends, but we still
        # honor the configured retry budget strictly
        for _ in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    f"{self.url}/v1/generate", json=payload, timeout=self.timeout
                )
                break
            except requests.RequestException as exc:
                last_exc = exc
        else:
            raise BackendTransportError(
                f"cannot reach backend at {self.url}: {last_exc}"
            ) from last_exc
        if resp.status_code != 200:
            raise BackendHTTPError(
                f"generate failed with HTTP {resp.status_code}: {resp.text[:200]}",
                resp.status_code,
            )
        try:
            outputs = resp.json()["outputs"]
        except (ValueError, KeyError) as exc:
            raise BackendProtocolError(f"malformed generate response: {exc}") from None
        if not isinstance(outputs, list) or len(outputs) != len(inputs):
            raise BackendProtocolError(
                f"expected {len(inputs)} outputs, got "
                f"{len(outputs) if isinstance(outputs, list) else type(outputs).__name__}"
            )
        return [str(o) for o in outputs]


def _check_task(task: str) -> None:
    if task not in WIRE_TASKS:
        raise ValidationError(f"task must be one of {WIRE_TASKS}, got {task!r}")


def make_backend(spec: str, timeout: float = 30.0, max_retries: int = 0):
    """Resolve a backend spec: 'echo', 'gold:<jsonl>[,<jsonl>...]' or a URL."""
    if spec == "echo":
        return EchoBackend()
    if spec.startswith("gold:"):
        paths = [p for p in spec.split(":", 1)[1].split(",") if p]
        if not paths:
            raise ValidationError("gold backend needs at least one sample file")
        return GoldReplayBackend.from_files(paths)
    if spec.startswith(("http://", "https://")):
        return HttpBackend(spec, timeout=timeout, max_retries=max_retries)
    raise ValidationError(f"unknown backend spec {spec!r}")
