"""Wire protocol for external classifiers running as child processes.

Framing is line-delimited JSON over the child's standard streams. The child
announces itself with ``gestalt-proto 1 <class_count>`` and then answers one
request line with one response line. A handle keeps a single request in
flight; spawn several handles for parallelism.
"""
from __future__ import annotations

import base64
import json
import queue
import subprocess
import threading

import numpy as np

from .errors import ClassifierError, ProtocolError
from .raster import Raster

HANDSHAKE_PREFIX = "gestalt-proto 1 "
HANDSHAKE_TIMEOUT = 10.0
INFERENCE_TIMEOUT = 60.0


def encode_pixels(img: Raster) -> str:
    return base64.b64encode(img.pixels.tobytes()).decode("ascii")


def decode_pixels(b64: str, width: int, height: int, channels: int) -> Raster:
    raw = base64.b64decode(b64)
    if len(raw) != width * height * channels:
        raise ProtocolError(
            f"pixel payload is {len(raw)} bytes, expected {width * height * channels}"
        )
    arr = np.frombuffer(raw, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, channels)
    return Raster(arr.reshape(shape).copy())


class RemoteClassifier:
    """Handle to a spawned classifier child implementing the line protocol."""

    def __init__(self, proc: subprocess.Popen, class_count: int,
                 lines: queue.Queue, inference_timeout: float = INFERENCE_TIMEOUT):
        self._proc = proc
        self.class_count = class_count
        self._timeout = inference_timeout
        self._next_id = 0
        self._lock = threading.Lock()
        self._lines = lines  # fed by the single reader thread on proc.stdout

    def _read_line(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise ProtocolError(f"classifier produced no output within {timeout}s")
        if line is None:
            raise ClassifierError(
                f"classifier exited (code {self._proc.poll()}) mid-sweep"
            )
        return line

    def scores(self, img: Raster) -> np.ndarray:
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            request = json.dumps(
                {
                    "id": req_id,
                    "width": img.width,
                    "height": img.height,
                    "channels": img.channels,
                    "pixels": encode_pixels(img),
                }
            )
            try:
                self._proc.stdin.write(request + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ClassifierError(f"classifier pipe closed: {exc}") from exc
            line = self._read_line(self._timeout)
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line {line!r}") from exc
        if resp.get("id") != req_id:
            raise ProtocolError(
                f"response id {resp.get('id')} does not match request {req_id}"
            )
        scores = np.asarray(resp.get("scores", []), dtype=np.float64)
        if scores.shape != (self.class_count,):
            raise ProtocolError(
                f"expected {self.class_count} scores, got {scores.shape}"
            )
        if not np.isfinite(scores).all():
            raise ProtocolError("non-finite score in response")
        total = float(scores.sum())
        if not 0.9 <= total <= 1.1:
            raise ProtocolError(f"score sum {total} outside [0.9, 1.1]")
        return scores / total

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _pump_lines(stream, out_queue: queue.Queue):
    for line in stream:
        out_queue.put(line.rstrip("\n"))
    out_queue.put(None)


def spawn_classifier(
    command: list[str],
    handshake_timeout: float = HANDSHAKE_TIMEOUT,
    inference_timeout: float = INFERENCE_TIMEOUT,
) -> RemoteClassifier:
    """Start a classifier child and consume its handshake line."""
    try:
        proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
    except OSError as exc:
        raise ClassifierError(f"cannot start {command!r}: {exc}") from exc
    lines: queue.Queue = queue.Queue()
    reader = threading.Thread(target=_pump_lines, args=(proc.stdout, lines), daemon=True)
    reader.start()
    try:
        first = lines.get(timeout=handshake_timeout)
    except queue.Empty:
        proc.kill()
        raise ProtocolError(
            f"no handshake within {handshake_timeout}s from {command!r}"
        )
    if first is None or not first.startswith(HANDSHAKE_PREFIX):
        stderr = ""
        try:
            proc.kill()
            stderr = proc.stderr.read()
        except Exception:
            pass
        raise ProtocolError(
            f"garbled handshake {first!r} from {command!r}; stderr: {stderr[:500]}"
        )
    try:
        class_count = int(first[len(HANDSHAKE_PREFIX):].strip())
    except ValueError:
        proc.kill()
        raise ProtocolError(f"bad class count in handshake {first!r}")
    return RemoteClassifier(proc, class_count, lines, inference_timeout)
