"""Client side of the detector adapter protocol.

An adapter is an external process scoring media samples, one JSON object
per line over its standard input/output:

    hello (adapter -> harness, unprompted):
        {"type": "hello", "name": ..., "version": ...,
         "score_orientation": "fake_high", "batch_max": N}
    request (harness -> adapter):
        {"type": "score", "id": ..., "png_b64": ...}
        {"type": "score_path", "id": ..., "path": ...}
        {"type": "score_clip", "id": ..., "frame_paths": [...]}
    response (adapter -> harness):
        {"type": "score", "id": ..., "score": 0.0-1.0}
        {"type": "error", "id": ..., "message": ...}
    shutdown (harness -> adapter):
        {"type": "bye"}

Scores are oriented "higher means fake"; adapters must declare
``score_orientation: fake_high`` in the handshake or the session is
refused. Requests are issued one at a time per session; parallelism
comes from running several sessions.
"""

from __future__ import annotations

import base64
import json
import select
import shlex
import subprocess
import time
from dataclasses import dataclass

from .errors import (
    AdapterCrash,
    AdapterHandshakeFailure,
    AdapterReportedError,
    ProtocolViolation,
    SampleTimeout,
)

HANDSHAKE_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class AdapterHello:
    name: str
    version: str
    score_orientation: str
    batch_max: int

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "score_orientation": self.score_orientation,
            "batch_max": self.batch_max,
        }


class AdapterSession:
    """One adapter subprocess plus its line-buffered protocol state."""

    def __init__(self, command: str):
        self.command = command
        self._proc: subprocess.Popen | None = None
        self._buffer = b""
        self.hello: AdapterHello | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self, handshake_timeout_s: float = HANDSHAKE_TIMEOUT_S) -> AdapterHello:
        argv = shlex.split(self.command)
        try:
            # bufsize=0 keeps stdout unbuffered so select() on the fd and
            # read() never disagree about pending bytes
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
                bufsize=0,
            )
        except (OSError, ValueError) as e:
            raise AdapterHandshakeFailure(f"cannot launch adapter {self.command!r}: {e}") from e
        try:
            msg = self._read_message(handshake_timeout_s)
        except (SampleTimeout, AdapterCrash, ProtocolViolation) as e:
            self.kill()
            raise AdapterHandshakeFailure(f"no valid hello from {self.command!r}: {e}") from e
        if msg.get("type") != "hello" or "error" in msg:
            self.kill()
            raise AdapterHandshakeFailure(f"bad hello: {json.dumps(msg)[:300]}")
        orientation = msg.get("score_orientation")
        if orientation != "fake_high":
            self.kill()
            raise AdapterHandshakeFailure(
                f"adapter declares score_orientation={orientation!r}; fake_high is required"
            )
        self.hello = AdapterHello(
            name=str(msg.get("name", "")),
            version=str(msg.get("version", "")),
            score_orientation="fake_high",
            batch_max=int(msg.get("batch_max", 1)),
        )
        return self.hello

    def alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    def close(self) -> None:
        """Polite shutdown: send bye, give the process a moment, then reap."""
        if self._proc is None:
            return
        try:
            self._send({"type": "bye"})
            self._proc.stdin.close()
        except (BrokenPipeError, OSError, AdapterCrash):
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.kill()
        self._proc = None

    def kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    # -- requests ------------------------------------------------------------

    def score_image_bytes(self, request_id: str, png_bytes: bytes, timeout_s: float) -> float:
        req = {
            "type": "score",
            "id": request_id,
            "png_b64": base64.b64encode(png_bytes).decode("ascii"),
        }
        return self._roundtrip(req, timeout_s)

    def score_path(self, request_id: str, path: str, timeout_s: float) -> float:
        return self._roundtrip({"type": "score_path", "id": request_id, "path": path}, timeout_s)

    def score_clip(self, request_id: str, frame_paths: list[str], timeout_s: float) -> float:
        req = {"type": "score_clip", "id": request_id, "frame_paths": list(frame_paths)}
        return self._roundtrip(req, timeout_s)

    def _roundtrip(self, request: dict, timeout_s: float) -> float:
        self._send(request)
        msg = self._read_message(timeout_s)
        if msg.get("type") == "error":
            raise AdapterReportedError(str(msg.get("message", "unspecified adapter error")))
        if msg.get("type") != "score":
            raise ProtocolViolation(f"expected a score reply, got: {json.dumps(msg)[:300]}")
        if msg.get("id") != request["id"]:
            raise ProtocolViolation(
                f"reply id {msg.get('id')!r} does not match request id {request['id']!r}"
            )
        score = msg.get("score")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ProtocolViolation(f"score is not a number: {score!r}")
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise ProtocolViolation(f"score {score} outside [0, 1]")
        return score

    # -- wire I/O ---------------------------------------------------------------

    def _send(self, obj: dict) -> None:
        if self._proc is None or self._proc.stdin is None:
            raise AdapterCrash("adapter session is not running")
        line = json.dumps(obj, separators=(",", ":")) + "\n"
        try:
            self._proc.stdin.write(line.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise AdapterCrash(f"adapter stdin closed: {e}") from e

    def _read_message(self, timeout_s: float) -> dict:
        line = self._read_line(timeout_s)
        try:
            msg = json.loads(line.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ProtocolViolation(f"reply is not JSON: {line[:200]!r}") from e
        if not isinstance(msg, dict):
            raise ProtocolViolation(f"reply is not an object: {line[:200]!r}")
        return msg

    def _read_line(self, timeout_s: float) -> bytes:
        deadline = time.monotonic() + timeout_s
        fd = self._proc.stdout.fileno()
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line, self._buffer = self._buffer[:newline], self._buffer[newline + 1:]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise SampleTimeout(f"no reply within {timeout_s}s from {self.command!r}")
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.5))
            if not ready:
                if not self.alive():
                    raise AdapterCrash(f"adapter exited (rc={self._proc.poll()})")
                continue
            chunk = self._proc.stdout.read(65536)
            if not chunk:
                raise AdapterCrash(f"adapter closed stdout (rc={self._proc.poll()})")
            self._buffer += chunk
