"""Token-level language model backends.

Two kinds exist: the builtin token n-gram (self-contained, used for tests
and offline work) and the remote wire-protocol client in ``remote``.  Both
answer batched next-token log-probability queries normalized over the full
vocabulary, in natural log.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence, Union

from .vocab import TokenVocab

# Candidate sentinel requesting the full vocabulary (also the wire literal).
ALL = "all"

Cands = Union[Sequence[int], str]


class BackendError(Exception):
    """A backend query failed; the prediction must abort."""


class UnsupportedOperation(BackendError):
    """The backend does not implement the requested operation."""


class Backend:
    """Interface shared by builtin and remote backends.

    ``next_token_logprobs`` takes a batch of (context, candidates) items
    and returns, per item, natural-log probabilities aligned with the
    candidate list (or with token-id order when candidates is ``ALL``).
    Values come from a distribution normalized over the full vocabulary
    no matter how few candidates are requested.
    """

    kind: str = "?"
    vocab: TokenVocab
    authoritative_tokenize: bool = False

    def next_token_logprobs(
            self, items: Sequence[tuple[Sequence[int], Cands]]
    ) -> list[list[float]]:
        raise NotImplementedError

    def tokenize(self, text: str) -> list[int]:
        raise UnsupportedOperation(
            f"{self.kind} backend has no authoritative tokenizer")

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TokenNGramBackend(Backend):
    """Witten-Bell smoothed token n-gram over a fixed vocabulary.

    The base distribution is uniform over the non-special tokens; special
    tokens (BOS included) are context-only and receive zero probability as
    outcomes.  Read-only after training and safe to share.
    """

    kind = "builtin-ngram"

    def __init__(self, vocab: TokenVocab, order: int,
                 counts: dict[tuple[int, ...], dict[int, int]]):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        self.vocab = vocab
        self.order = order
        self._counts = counts
        self._totals = {h: sum(c.values()) for h, c in counts.items()}
        self._types = {h: len(c) for h, c in counts.items()}
        self._base = 1.0 / len(vocab.matchable_ids)
        self._dist_cache: dict[tuple[int, ...], dict[int, float]] = {}

    def _prob(self, h: tuple[int, ...], w: int) -> float:
        c_h = self._totals.get(h, 0)
        t_h = self._types.get(h, 0)
        lower = self._prob(h[1:], w) if h else self._base
        if c_h + t_h == 0:
            return lower
        c_hw = self._counts[h].get(w, 0)
        return (c_hw + t_h * lower) / (c_h + t_h)

    def _distribution(self, ctx: tuple[int, ...]) -> dict[int, float]:
        h = ctx[-(self.order - 1):] if self.order > 1 else ()
        if len(h) < self.order - 1:
            h = (self.vocab.bos_id,) * (self.order - 1 - len(h)) + h
        dist = self._dist_cache.get(h)
        if dist is None:
            dist = {w: self._prob(h, w) for w in self.vocab.matchable_ids}
            self._dist_cache[h] = dist
        return dist

    def next_token_logprobs(self, items):
        out = []
        for ctx, cands in items:
            if not ctx:
                raise BackendError("empty context")
            for tid in ctx:
                if tid not in self.vocab:
                    raise BackendError(f"unknown token id {tid} in context")
            dist = self._distribution(tuple(ctx))
            if cands == ALL:
                row = [-math.inf] * self.vocab.id_bound
                for tid, p in dist.items():
                    if p > 0.0:
                        row[tid] = math.log(p)
            else:
                row = []
                for tid in cands:
                    if tid not in self.vocab:
                        raise BackendError(f"unknown candidate id {tid}")
                    p = dist.get(tid, 0.0)
                    row.append(math.log(p) if p > 0.0 else -math.inf)
            out.append(row)
        return out


class TrainingError(Exception):
    """Raised when model training is impossible (e.g. empty corpus)."""


def train_token_ngram(sentences: Iterable[str], vocab: TokenVocab,
                      order: int) -> TokenNGramBackend:
    """Train the builtin token n-gram on greedy-tokenized sentences.

    Contexts are BOS-padded on the left; no end-of-sentence event is
    counted.
    """
    if order < 1:
        raise TrainingError(f"order must be >= 1, got {order}")
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    pad = (vocab.bos_id,) * (order - 1)
    events = 0
    for sentence in sentences:
        ids = vocab.greedy_tokenize(sentence)
        padded = pad + tuple(ids)
        for i, tid in enumerate(ids):
            pos = (order - 1) + i
            for k in range(order):
                h = padded[pos - k:pos]
                counts.setdefault(h, {})
                counts[h][tid] = counts[h].get(tid, 0) + 1
            events += 1
    if events == 0:
        raise TrainingError("empty corpus")
    return TokenNGramBackend(vocab, order, counts)


def save_token_ngram(backend: TokenNGramBackend, path: str) -> None:
    """Persist a builtin model (vocabulary embedded) as JSON."""
    vocab = backend.vocab
    records = [{"id": tid, "text": s, "special": sp}
               for tid, s, sp in vocab.records()]
    counts = {
        " ".join(str(t) for t in h): {str(w): c for w, c in cw.items()}
        for h, cw in backend._counts.items()
    }
    doc = {"version": 1, "kind": "token-ngram", "order": backend.order,
           "vocab": {"version": 1, "bos_id": vocab.bos_id, "tokens": records},
           "counts": counts}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False)
        f.write("\n")


def load_token_ngram(path: str) -> TokenNGramBackend:
    """Load a builtin model saved by ``save_token_ngram``."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("version") != 1 or doc.get("kind") != "token-ngram":
        raise BackendError(f"{path}: not a token-ngram model file")
    v = doc["vocab"]
    tokens = [(rec["id"], rec["text"]) for rec in v["tokens"]]
    specials = {rec["id"] for rec in v["tokens"] if rec.get("special")}
    vocab = TokenVocab(tokens, v["bos_id"], specials)
    counts = {
        tuple(int(t) for t in h.split()) if h else ():
            {int(w): c for w, c in cw.items()}
        for h, cw in doc["counts"].items()
    }
    return TokenNGramBackend(vocab, doc["order"], counts)
