"""Run an external command as a black-box model over stdin/stdout.

Protocol: line-delimited JSON. Each request is one line
``{"inputs": [[...], ...]}`` carrying a batch of input rows; the bridge must
answer with one line ``{"outputs": [[...], ...]}`` carrying exactly one
output row per input row. One request is in flight at a time. Any
non-conforming response aborts the run with the raw payload in the error.
"""

from __future__ import annotations

import collections
import json
import shlex
import subprocess
import threading
from typing import Sequence

import numpy as np

from .core import BlackBoxModel, ExplainerError

_RAW_LIMIT = 500  # characters of raw payload echoed back in errors


class BridgeProtocolError(ExplainerError, RuntimeError):
    """The external model broke the line-delimited request/response protocol."""


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


class ExternalModelBridge:
    """Child process speaking the line-delimited JSON model protocol."""

    def __init__(
        self,
        command: str | Sequence[str],
        *,
        output_names: tuple[str, ...] = ("y",),
    ) -> None:
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.command = argv
        self.output_names = tuple(output_names)
        self._lock = threading.Lock()  # one request in flight at a time
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BridgeProtocolError(f"cannot launch bridge command {argv}: {exc}") from exc
        self._stderr_tail: collections.deque[str] = collections.deque(maxlen=50)
        self._stderr_thread = threading.Thread(target=self._drain_stderr, daemon=True)
        self._stderr_thread.start()

    def _drain_stderr(self) -> None:
        assert self._proc.stderr is not None
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diagnostics(self) -> str:
        parts = []
        code = self._proc.poll()
        if code is not None:
            parts.append(f"exit status {code}")
        if self._stderr_tail:
            parts.append("stderr tail: " + " | ".join(self._stderr_tail))
        return ("; " + "; ".join(parts)) if parts else ""

    def evaluate(self, matrix: np.ndarray) -> np.ndarray:
        rows = [[_jsonable(v) for v in row] for row in matrix]
        payload = json.dumps({"inputs": rows}) + "\n"
        with self._lock:
            if self._proc.poll() is not None:
                raise BridgeProtocolError(
                    f"bridge process is not running{self._diagnostics()}"
                )
            try:
                assert self._proc.stdin is not None and self._proc.stdout is not None
                self._proc.stdin.write(payload)
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise BridgeProtocolError(
                    f"bridge pipe failed: {exc}{self._diagnostics()}"
                ) from exc
        if not line:
            raise BridgeProtocolError(
                f"bridge closed its output stream{self._diagnostics()}"
            )
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(
                f"bridge sent malformed JSON: {line[:_RAW_LIMIT]!r}"
            ) from exc
        outputs = message.get("outputs") if isinstance(message, dict) else None
        if not isinstance(outputs, list) or len(outputs) != len(rows):
            got = len(outputs) if isinstance(outputs, list) else "no"
            raise BridgeProtocolError(
                f"bridge returned {got} output rows for {len(rows)} input rows; "
                f"raw response: {line[:_RAW_LIMIT]!r}"
            )
        try:
            array = np.asarray(outputs, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise BridgeProtocolError(
                f"bridge output rows are not numeric: {line[:_RAW_LIMIT]!r}"
            ) from exc
        if array.ndim != 2 or array.shape[1] != len(self.output_names):
            raise BridgeProtocolError(
                f"bridge output shape {array.shape} does not match "
                f"{len(self.output_names)} declared output(s); "
                f"raw response: {line[:_RAW_LIMIT]!r}"
            )
        return array

    def as_model(self) -> BlackBoxModel:
        """The bridge as a model; requests are serialized by construction."""
        return BlackBoxModel(
            predict=self.evaluate, output_names=self.output_names, serialized=True
        )

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.wait(timeout=2)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalModelBridge":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
