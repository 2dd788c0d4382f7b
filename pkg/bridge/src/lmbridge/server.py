"""Newline-delimited JSON protocol server.

Frames (one JSON object per line; the engine is the client):

    -> {"op":"hello","version":1}
    <- {"op":"hello","version":1,"vocab_size":N,"bos_id":k,
        "tokenize":true,"name":str}
    -> {"op":"vocab"}            <- {"op":"vocab","tokens":[[id,text,special],...]}
    -> {"op":"tokenize","id":q,"text":s}
    -> {"op":"logprobs","id":q,"items":[{"ctx":[...],"cands":[...]|"all"},...]}

Bad requests get {"op":"error","id":q,"message":...} and the connection
stays alive.  One connection handles one serial request stream.
"""

from __future__ import annotations

import json
import socket
import sys
import threading

from .model import HostedModel, RequestError

PROTOCOL_VERSION = 1


def _handle(model: HostedModel, request: dict) -> dict:
    op = request.get("op")
    rid = request.get("id")
    if op == "hello":
        if request.get("version") != PROTOCOL_VERSION:
            return {"op": "error", "id": rid,
                    "message": f"unsupported protocol version "
                               f"{request.get('version')!r}"}
        return {"op": "hello", "version": PROTOCOL_VERSION,
                "vocab_size": model.vocab_size, "bos_id": model.bos_id,
                "tokenize": True, "name": model.config.model_id}
    if op == "vocab":
        return {"op": "vocab", "tokens": model.vocab_payload()}
    if op == "tokenize":
        text = request.get("text")
        if not isinstance(text, str):
            return {"op": "error", "id": rid, "message": "text must be a string"}
        return {"op": "tokenize", "id": rid, "ids": model.tokenize(text)}
    if op == "logprobs":
        items = request.get("items")
        if not isinstance(items, list):
            return {"op": "error", "id": rid, "message": "items must be a list"}
        try:
            rows = model.logprobs(items)
        except RequestError as e:
            return {"op": "error", "id": rid, "message": str(e)}
        except (RuntimeError, MemoryError) as e:
            return {"op": "error", "id": rid, "message": f"inference failed: {e}"}
        return {"op": "logprobs", "id": rid, "items": rows}
    return {"op": "error", "id": rid, "message": f"unknown op {op!r}"}


def serve_stream(model: HostedModel, reader, writer) -> None:
    for line in reader:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("frame must be a JSON object")
        except (json.JSONDecodeError, ValueError) as e:
            response = {"op": "error", "id": None,
                        "message": f"malformed request: {e}"}
        else:
            response = _handle(model, request)
        writer.write(json.dumps(response) + "\n")
        writer.flush()


def serve_stdio(model: HostedModel) -> None:
    serve_stream(model, sys.stdin, sys.stdout)


def serve_tcp(model: HostedModel, port: int) -> None:
    srv = socket.create_server(("127.0.0.1", port))
    bound = srv.getsockname()[1]
    print(f"listening on {bound}", file=sys.stderr, flush=True)
    gate = threading.Semaphore(model.config.max_connections)

    def client(conn):
        with conn, gate:
            reader = conn.makefile("r", encoding="utf-8")
            writer = conn.makefile("w", encoding="utf-8")
            try:
                serve_stream(model, reader, writer)
            except OSError:
                pass

    while True:
        conn, _ = srv.accept()
        threading.Thread(target=client, args=(conn,), daemon=True).start()
