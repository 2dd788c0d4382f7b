"""Client for out-of-process token LM backends.

The protocol is newline-delimited JSON over stdio or TCP, with the engine
as the client and exactly one in-flight request per connection:

    -> {"op":"hello","version":1}
    <- {"op":"hello","version":1,"vocab_size":N,"bos_id":k,
        "tokenize":bool,"name":str}
    -> {"op":"vocab"}
    <- {"op":"vocab","tokens":[[id,"text",special?],...]}
    -> {"op":"tokenize","id":q,"text":s}
    <- {"op":"tokenize","id":q,"ids":[...]}
    -> {"op":"logprobs","id":q,"items":[{"ctx":[...],"cands":[...]|"all"},...]}
    <- {"op":"logprobs","id":q,"items":[[lp,...],...]}

Any request may be answered with {"op":"error","id":q,"message":s}; the
client raises and the prediction aborts rather than degrading silently.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from typing import Sequence

from .backend import ALL, Backend, BackendError, UnsupportedOperation
from .vocab import TokenVocab

PROTOCOL_VERSION = 1


class RemoteBackend(Backend):
    """One connection, one serial request stream.

    Not shareable across threads; open one connection per worker.
    """

    kind = "remote"

    def __init__(self, reader, writer, closer=None):
        self._reader = reader
        self._writer = writer
        self._closer = closer
        self._next_id = 0
        hello = self._roundtrip({"op": "hello",
                                 "version": PROTOCOL_VERSION}, "hello")
        if hello.get("version") != PROTOCOL_VERSION:
            raise BackendError(
                f"backend speaks protocol version {hello.get('version')}, "
                f"expected {PROTOCOL_VERSION}")
        self.name = hello.get("name", "remote")
        self.authoritative_tokenize = bool(hello.get("tokenize", False))
        vocab_size = hello.get("vocab_size")
        bos_id = hello.get("bos_id")
        frame = self._roundtrip({"op": "vocab"}, "vocab")
        tokens = []
        specials = set()
        for rec in frame.get("tokens", []):
            tid, text = rec[0], rec[1]
            tokens.append((tid, text))
            if len(rec) > 2 and rec[2]:
                specials.add(tid)
        if vocab_size != len(tokens):
            raise BackendError(
                f"hello reported vocab_size {vocab_size} but vocab frame "
                f"has {len(tokens)} tokens")
        self.vocab = TokenVocab(tokens, bos_id, specials)

    @classmethod
    def launch(cls, command: str | Sequence[str]) -> "RemoteBackend":
        """Spawn the backend as a child process and talk over its stdio."""
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)

        def closer():
            proc.stdin.close()
            proc.wait(timeout=10)

        return cls(proc.stdout, proc.stdin, closer)

    @classmethod
    def connect(cls, host: str, port: int, timeout: float | None = None
                ) -> "RemoteBackend":
        """Connect to a backend listening on TCP."""
        sock = socket.create_connection((host, port), timeout=timeout)
        reader = sock.makefile("r", encoding="utf-8")
        writer = sock.makefile("w", encoding="utf-8")

        def closer():
            reader.close()
            writer.close()
            sock.close()

        return cls(reader, writer, closer)

    def _roundtrip(self, request: dict, expect_op: str) -> dict:
        try:
            self._writer.write(json.dumps(request) + "\n")
            self._writer.flush()
            line = self._reader.readline()
        except (OSError, ValueError) as e:
            raise BackendError(f"backend connection failed: {e}") from e
        if not line:
            raise BackendError("backend closed the connection")
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as e:
            raise BackendError(f"backend sent invalid JSON: {e}") from e
        if frame.get("op") == "error":
            raise BackendError(
                f"backend error: {frame.get('message', 'unknown')}")
        if frame.get("op") != expect_op:
            raise BackendError(
                f"expected {expect_op!r} frame, got {frame.get('op')!r}")
        if "id" in request and frame.get("id") != request["id"]:
            raise BackendError(
                f"response id {frame.get('id')} does not match request "
                f"id {request['id']}")
        return frame

    def _fresh_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def tokenize(self, text: str) -> list[int]:
        if not self.authoritative_tokenize:
            raise UnsupportedOperation(
                f"backend {self.name!r} does not tokenize")
        frame = self._roundtrip(
            {"op": "tokenize", "id": self._fresh_id(), "text": text},
            "tokenize")
        return list(frame["ids"])

    def next_token_logprobs(self, items):
        wire_items = []
        for ctx, cands in items:
            if not ctx:
                raise BackendError("empty context")
            wire_items.append({
                "ctx": list(ctx),
                "cands": ALL if cands == ALL else list(cands),
            })
        frame = self._roundtrip(
            {"op": "logprobs", "id": self._fresh_id(), "items": wire_items},
            "logprobs")
        rows = frame.get("items")
        if not isinstance(rows, list) or len(rows) != len(items):
            raise BackendError(
                f"logprobs frame has {len(rows) if isinstance(rows, list) else 'no'} "
                f"rows for {len(items)} items")
        out = []
        for (ctx, cands), row in zip(items, rows):
            want = self.vocab.id_bound if cands == ALL else len(cands)
            if len(row) != want:
                raise BackendError(
                    f"logprobs row has {len(row)} values, expected {want}")
            out.append([float(v) for v in row])
        return out

    def close(self) -> None:
        if self._closer is not None:
            try:
                self._closer()
            finally:
                self._closer = None
