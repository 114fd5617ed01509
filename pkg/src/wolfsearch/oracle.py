"""Line-protocol adapter for external generator and matcher processes.

The counterparty is any executable that reads requests from stdin and
writes one response line per request to stdout. All lines are ASCII,
fields are separated by single spaces, and numbers are written the way
Python's ``repr`` prints a float (shortest round-trip form).

Requests:
    GEN <d> <z_0> ... <z_{d-1}>
    MATCH <e> <p_0> ... <p_{e-1}> <t_0> ... <t_{e-1}>

Responses:
    VEC <e> <v_0> ... <v_{e-1}>
    SCORE <s>
    ERR <message ...>

The exchange is strictly lockstep: one request is written, then its
response is read before anything else happens. A response that does not
parse, an ERR line, a dead process, or silence past the timeout all
raise :class:`OracleError` carrying the offending exchange. Setting the
environment variable ``WOLFSEARCH_ORACLE_TRACE=1`` mirrors every line
to stderr for debugging.
"""

from __future__ import annotations

import os
import queue
import subprocess
import sys
import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import as_vector

__all__ = ["OracleEndpoint", "OracleError", "OracleProcess", "format_floats"]

_EOF = object()


class OracleError(RuntimeError):
    """An external oracle misbehaved (bad reply, ERR, crash, or timeout)."""

    def __init__(self, message: str, transcript: tuple[str, ...] = ()):
        self.transcript = transcript
        if transcript:
            message = message + "\n" + "\n".join(transcript)
        super().__init__(message)


@dataclass(frozen=True)
class OracleEndpoint:
    """How to start and talk to one oracle process.

    ``command`` is the argv list passed to the OS (no shell). ``verbs``
    declares what the oracle implements. The dims are optional
    declarations; when present, requests and responses are checked
    against them before anything hits the wire.
    """

    command: tuple[str, ...]
    verbs: frozenset[str] = frozenset({"GEN", "MATCH"})
    latent_dim: int | None = None
    embed_dim: int | None = None
    timeout_ms: int = 10000
    env: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if len(self.command) == 0:
            raise ValueError("oracle command must not be empty")
        unknown = set(self.verbs) - {"GEN", "MATCH"}
        if unknown:
            raise ValueError(f"unknown oracle verbs {sorted(unknown)}")
        if not self.verbs:
            raise ValueError("oracle must support at least one verb")
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout_ms must be positive, got {self.timeout_ms}")


def format_floats(values) -> str:
    """Space-separated shortest round-trip decimal forms."""
    return " ".join(repr(float(v)) for v in values)


class OracleProcess:
    """One running oracle child; spawned lazily on the first request."""

    def __init__(self, endpoint: OracleEndpoint):
        endpoint.validate()
        self.endpoint = endpoint
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._stderr_tail: deque[str] = deque(maxlen=40)
        self._trace = os.environ.get("WOLFSEARCH_ORACLE_TRACE") == "1"
        self._lock = threading.Lock()

    # -- process management -------------------------------------------

    def _spawn(self) -> None:
        env = None
        if self.endpoint.env:
            env = dict(os.environ)
            env.update(self.endpoint.env)
        try:
            self._proc = subprocess.Popen(
                list(self.endpoint.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
                env=env,
            )
        except OSError as e:
            raise OracleError(
                f"could not start oracle {self.endpoint.command[0]!r}: {e}"
            ) from e
        threading.Thread(
            target=self._pump, args=(self._proc.stdout, self._lines), daemon=True
        ).start()
        threading.Thread(
            target=self._pump_stderr, args=(self._proc.stderr,), daemon=True
        ).start()

    @staticmethod
    def _pump(stream, sink: queue.Queue) -> None:
        for line in stream:
            sink.put(line)
        sink.put(_EOF)

    def _pump_stderr(self, stream) -> None:
        for line in stream:
            self._stderr_tail.append(line.rstrip("\n"))

    def close(self) -> None:
        if self._proc is None:
            return
        proc, self._proc = self._proc, None
        try:
            if proc.stdin:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "OracleProcess":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- wire ----------------------------------------------------------

    def _exchange(self, request: str) -> tuple[str, tuple[str, ...]]:
        with self._lock:
            if self._proc is None:
                self._spawn()
            if self._trace:
                sys.stderr.write(f"oracle >> {request}\n")
            transcript = [f">> {request}"]
            try:
                self._proc.stdin.write(request + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as e:
                self._fail("oracle process closed its stdin", transcript, cause=e)
            try:
                line = self._lines.get(timeout=self.endpoint.timeout_ms / 1000.0)
            except queue.Empty:
                self._kill()
                self._fail(
                    f"oracle timed out after {self.endpoint.timeout_ms} ms",
                    transcript,
                )
            if line is _EOF:
                self._fail("oracle process exited before replying", transcript)
            response = line.rstrip("\n")
            if self._trace:
                sys.stderr.write(f"oracle << {response}\n")
            transcript.append(f"<< {response}")
            return response, tuple(transcript)

    def _kill(self) -> None:
        if self._proc is not None:
            proc, self._proc = self._proc, None
            proc.kill()
            proc.wait()

    def _fail(self, message: str, transcript: list[str], cause=None):
        tail = list(self._stderr_tail)
        if tail:
            transcript = transcript + ["stderr: " + " | ".join(tail[-5:])]
        err = OracleError(message, tuple(transcript))
        if cause is not None:
            raise err from cause
        raise err

    # -- requests ------------------------------------------------------

    def gen(self, z) -> np.ndarray:
        """GEN request; returns the embedding from a VEC response."""
        if "GEN" not in self.endpoint.verbs:
            raise ValueError("endpoint does not declare the GEN verb")
        zv = as_vector(z, name="latent")
        if self.endpoint.latent_dim is not None and zv.size != self.endpoint.latent_dim:
            raise ValueError(
                f"latent has dim {zv.size}, endpoint declares {self.endpoint.latent_dim}"
            )
        request = f"GEN {zv.size} {format_floats(zv)}"
        response, transcript = self._exchange(request)
        fields = response.split(" ")
        if fields[0] == "ERR":
            raise OracleError(
                "oracle reported an error: " + response[4:], transcript
            )
        if fields[0] != "VEC":
            raise OracleError(
                f"expected VEC response, got {fields[0]!r}", transcript
            )
        try:
            e = int(fields[1])
            values = [float(tok) for tok in fields[2:]]
        except (IndexError, ValueError):
            raise OracleError("malformed VEC response", transcript) from None
        if len(values) != e:
            raise OracleError(
                f"VEC declares {e} values but carries {len(values)}", transcript
            )
        if self.endpoint.embed_dim is not None and e != self.endpoint.embed_dim:
            raise OracleError(
                f"VEC has dim {e}, endpoint declares {self.endpoint.embed_dim}",
                transcript,
            )
        out = np.array(values, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise OracleError("VEC response contains non-finite values", transcript)
        return out

    def match(self, probe, template) -> float:
        """MATCH request; returns the similarity from a SCORE response."""
        if "MATCH" not in self.endpoint.verbs:
            raise ValueError("endpoint does not declare the MATCH verb")
        pv = as_vector(probe, name="probe")
        tv = as_vector(template, name="template")
        if pv.size != tv.size:
            raise ValueError(
                f"probe dim {pv.size} != template dim {tv.size}"
            )
        if self.endpoint.embed_dim is not None and pv.size != self.endpoint.embed_dim:
            raise ValueError(
                f"embedding has dim {pv.size}, endpoint declares {self.endpoint.embed_dim}"
            )
        request = f"MATCH {pv.size} {format_floats(pv)} {format_floats(tv)}"
        response, transcript = self._exchange(request)
        fields = response.split(" ")
        if fields[0] == "ERR":
            raise OracleError(
                "oracle reported an error: " + response[4:], transcript
            )
        if fields[0] != "SCORE" or len(fields) != 2:
            raise OracleError(
                f"expected SCORE response, got {response!r}", transcript
            )
        try:
            score = float(fields[1])
        except ValueError:
            raise OracleError("malformed SCORE response", transcript) from None
        if not np.isfinite(score):
            raise OracleError(f"non-finite score {fields[1]}", transcript)
        return score
