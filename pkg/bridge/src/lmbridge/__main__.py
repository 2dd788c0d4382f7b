"""Entry point: serve a model over the wire protocol or export its vocab."""

from __future__ import annotations

import argparse
import json
import sys

from .model import BridgeConfig, BridgeError, HostedModel
from .server import serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lmbridge",
        description="Serve a Hugging Face causal LM to the nextchar engine.")
    parser.add_argument("--model", required=True,
                        help="model identifier or local checkpoint directory")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--precision",
                        choices=["auto", "float16", "float32"],
                        default="auto")
    parser.add_argument("--max-batch", type=int, default=64)
    parser.add_argument("--max-connections", type=int, default=4)
    parser.add_argument("--listen", default="stdio", metavar="stdio|tcp:PORT")
    parser.add_argument("--export-vocab", metavar="PATH",
                        help="write the engine vocab JSON and exit")
    args = parser.parse_args(argv)

    config = BridgeConfig(model_id=args.model, device=args.device,
                          precision=args.precision, max_batch=args.max_batch,
                          max_connections=args.max_connections)
    try:
        model = HostedModel(config)
    except BridgeError as e:
        print(f"lmbridge: {e}", file=sys.stderr)
        return 2

    if args.export_vocab:
        records = [{"id": tid, "text": text, "special": special}
                   for tid, text, special in model.records]
        with open(args.export_vocab, "w", encoding="utf-8") as f:
            json.dump({"version": 1, "bos_id": model.bos_id,
                       "tokens": records}, f, ensure_ascii=False)
            f.write("\n")
        print(f"wrote {args.export_vocab}", file=sys.stderr)
        return 0

    if args.listen == "stdio":
        serve_stdio(model)
        return 0
    if args.listen.startswith("tcp:"):
        serve_tcp(model, int(args.listen.split(":", 1)[1]))
        return 0
    print(f"lmbridge: unknown listen mode {args.listen!r}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
