"""Client for external recognizer and scorer endpoints.

Framing: one JSON object per line, UTF-8, LF separators, over a spawned
subprocess's standard streams or a TCP socket. Requests carry a fresh id;
responses echo it and may arrive out of order. The client serializes
requests on a connection and buffers mismatched responses until theirs
turns up; responses for abandoned (timed-out) requests are dropped.
"""

from __future__ import annotations

import json
import math
import select
import socket
import subprocess
import threading
import time
from typing import Sequence

from .candidates import CandidateSummary
from .entities import EntityLabel, EntityMention
from .errors import (
    CountMismatchError,
    EndpointUnreachableError,
    ProtocolViolationError,
    RequestTimeoutError,
)

_CHUNK = 65536


class SubprocessTransport:
    """Line transport over a child process's stdin/stdout."""

    def __init__(self, command: Sequence[str]):
        try:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise EndpointUnreachableError(f"cannot spawn {command!r}: {exc}") from exc
        self._buffer = b""

    def send_line(self, line: bytes) -> None:
        if self._proc.poll() is not None:
            raise EndpointUnreachableError("endpoint process has exited")
        try:
            self._proc.stdin.write(line + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EndpointUnreachableError(f"endpoint closed stdin: {exc}") from exc

    def recv_line(self, deadline: float) -> bytes:
        fd = self._proc.stdout
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise RequestTimeoutError("no response before deadline")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise RequestTimeoutError("no response before deadline")
            chunk = fd.read1(_CHUNK)
            if not chunk:
                raise EndpointUnreachableError("endpoint closed its output stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class TcpTransport:
    """Line transport over a TCP connection."""

    def __init__(self, host: str, port: int, connect_timeout: float = 10.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise EndpointUnreachableError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._buffer = b""

    def send_line(self, line: bytes) -> None:
        try:
            self._sock.sendall(line + b"\n")
        except OSError as exc:
            raise EndpointUnreachableError(f"endpoint connection failed: {exc}") from exc

    def recv_line(self, deadline: float) -> bytes:
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise RequestTimeoutError("no response before deadline")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(_CHUNK)
            except socket.timeout:
                raise RequestTimeoutError("no response before deadline") from None
            except OSError as exc:
                raise EndpointUnreachableError(f"endpoint connection failed: {exc}") from exc
            if not chunk:
                raise EndpointUnreachableError("endpoint closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class WireClient:
    """Request/response layer with id matching and a per-request budget."""

    def __init__(self, transport, timeout: float = 10.0):
        self._transport = transport
        self._timeout = timeout
        self._counter = 0
        self._abandoned: set[str] = set()
        # one exchange at a time per connection; concurrent callers queue here
        self._lock = threading.Lock()

    def request(self, payload: dict) -> dict:
        with self._lock:
            return self._exchange(payload)

    def _exchange(self, payload: dict) -> dict:
        self._counter += 1
        request_id = str(self._counter)
        body = dict(payload)
        body["id"] = request_id
        self._transport.send_line(json.dumps(body, ensure_ascii=False).encode("utf-8"))
        deadline = time.monotonic() + self._timeout
        while True:
            try:
                line = self._transport.recv_line(deadline)
            except RequestTimeoutError:
                self._abandoned.add(request_id)
                raise
            try:
                response = json.loads(line.decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise ProtocolViolationError(f"response is not a JSON line: {exc}") from exc
            if not isinstance(response, dict):
                raise ProtocolViolationError("response must be a JSON object")
            response_id = response.get("id")
            if response_id == request_id:
                return response
            if response_id in self._abandoned:
                self._abandoned.discard(response_id)
                continue
            raise ProtocolViolationError(f"response id {response_id!r} does not match request {request_id!r}")

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class RecognizerClient:
    """External entity recognizer speaking the NER wire operation.

    Mentions with out-of-range or overlapping spans are dropped and noted
    in ``diagnostics``; an unknown label is a protocol violation.
    """

    def __init__(self, client: WireClient):
        self._client = client
        self.diagnostics: list[str] = []

    def recognize(self, text: str) -> list[EntityMention]:
        response = self._client.request({"op": "ner", "text": text})
        entities = response.get("entities")
        if not isinstance(entities, list):
            raise ProtocolViolationError("ner response must carry an 'entities' list")
        mentions = []
        for index, entry in enumerate(entities):
            if not isinstance(entry, dict):
                raise ProtocolViolationError(f"entity {index} is not an object")
            try:
                start, end, label_name = entry["start"], entry["end"], entry["label"]
            except KeyError as exc:
                raise ProtocolViolationError(f"entity {index} missing field {exc.args[0]!r}") from exc
            if not isinstance(label_name, str):
                raise ProtocolViolationError(f"entity {index} label must be a string")
            try:
                label = EntityLabel(label_name)
            except ValueError as exc:
                raise ProtocolViolationError(f"entity {index} has unknown label {label_name!r}") from exc
            if not isinstance(start, int) or not isinstance(end, int) or not (0 <= start < end <= len(text)):
                self.diagnostics.append(f"dropped entity {index}: span [{start}, {end}) out of range")
                continue
            mentions.append(EntityMention.at(text, start, end, label))
        mentions.sort(key=lambda m: (m.start, m.end))
        kept: list[EntityMention] = []
        for mention in mentions:
            if kept and mention.start < kept[-1].end:
                self.diagnostics.append(
                    f"dropped entity at {mention.start}: overlaps mention ending at {kept[-1].end}"
                )
                continue
            kept.append(mention)
        return kept

    def close(self) -> None:
        self._client.close()


class ScorerClient:
    """External candidate scorer speaking the score wire operation."""

    def __init__(self, client: WireClient):
        self._client = client

    def score_candidates(self, document: str, candidates: Sequence) -> list[float]:
        texts = [c.text if isinstance(c, CandidateSummary) else str(c) for c in candidates]
        response = self._client.request({"op": "score", "document": document, "candidates": texts})
        scores = response.get("scores")
        if not isinstance(scores, list):
            raise ProtocolViolationError("score response must carry a 'scores' list")
        if len(scores) != len(texts):
            raise CountMismatchError(f"expected {len(texts)} scores, got {len(scores)}")
        out = []
        for index, value in enumerate(scores):
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ProtocolViolationError(f"score {index} is not a finite number: {value!r}")
            out.append(float(value))
        return out

    def close(self) -> None:
        self._client.close()
