"""Witten-Bell smoothed character n-gram model and mixture fitting.

The recursive estimate weights each order by its count of unique
continuations:

    p(w | h) = (c(h, w) + T(h) * p(w | h')) / (c(h) + T(h))

where h' drops the oldest symbol of h and the base case is uniform over
the 28-symbol set.  Contexts are padded with a start pseudo-symbol that is
never predicted.  No end-of-sentence event is counted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .backend import TrainingError
from .text import SYMBOL_SET, SYMBOLS, fold

START_PAD = "^"  # context-only pseudo-symbol, outside the symbol set


class CharNGramModel:
    """Immutable after training; shareable across readers."""

    def __init__(self, order: int, counts: dict[str, dict[str, int]]):
        if not 1 <= order <= 16:
            raise ValueError(f"order must be in 1..16, got {order}")
        self.order = order
        self._counts = counts
        self._totals = {h: sum(c.values()) for h, c in counts.items()}
        self._types = {h: len(c) for h, c in counts.items()}
        self._base = 1.0 / len(SYMBOLS)

    def _prob(self, h: str, w: str) -> float:
        c_h = self._totals.get(h, 0)
        t_h = self._types.get(h, 0)
        lower = self._prob(h[1:], w) if h else self._base
        if c_h + t_h == 0:
            return lower
        c_hw = self._counts[h].get(w, 0)
        return (c_hw + t_h * lower) / (c_h + t_h)

    def prob(self, context: str, char: str) -> float:
        """p(char | last order-1 context symbols), start-padded.

        The context is folded into the symbol set first, so cased input
        scores identically to its lowercase form.
        """
        if char not in SYMBOL_SET:
            raise ValueError(f"char {char!r} is not in the symbol set")
        folded = "".join(fold(c) or c for c in context)
        if self.order == 1:
            h = ""
        elif len(folded) >= self.order - 1:
            h = folded[-(self.order - 1):]
        else:
            h = START_PAD * (self.order - 1 - len(folded)) + folded
        return self._prob(h, char)

    def logprob(self, context: str, char: str) -> float:
        """Natural-log version of ``prob`` (always finite)."""
        return math.log(self.prob(context, char))

    def save(self, path: str) -> None:
        doc = {"version": 1, "order": self.order, "symbolset": SYMBOLS,
               "counts": self._counts}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, ensure_ascii=False)
            f.write("\n")

    @classmethod
    def load(cls, path: str) -> "CharNGramModel":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        if doc.get("version") != 1:
            raise TrainingError(f"{path}: unsupported model version")
        if doc.get("symbolset") != SYMBOLS:
            raise TrainingError(f"{path}: symbol set mismatch")
        counts = {h: {w: int(c) for w, c in cw.items()}
                  for h, cw in doc["counts"].items()}
        return cls(int(doc["order"]), counts)


def train_char_ngram(sentences: Iterable[str], order: int) -> CharNGramModel:
    """Count character events at every order up to ``order``.

    Sentences must already be normalized to the symbol set; empty ones
    are skipped.  Raises ``TrainingError`` on an empty stream.
    """
    if not 1 <= order <= 16:
        raise TrainingError(f"order must be in 1..16, got {order}")
    counts: dict[str, dict[str, int]] = {}
    events = 0
    pad = START_PAD * (order - 1)
    for sentence in sentences:
        if not sentence:
            continue
        for w in sentence:
            if w not in SYMBOL_SET:
                raise TrainingError(
                    f"character {w!r} outside the symbol set; normalize first")
        padded = pad + sentence
        for i, w in enumerate(sentence):
            pos = (order - 1) + i
            for k in range(order):
                h = padded[pos - k:pos]
                bucket = counts.setdefault(h, {})
                bucket[w] = bucket.get(w, 0) + 1
            events += 1
    if events == 0:
        raise TrainingError("empty corpus")
    return CharNGramModel(order, counts)


def interpolate(p1: float, p2: float, lam: float) -> float:
    """Linear two-model mixture: lam * p1 + (1 - lam) * p2."""
    return lam * p1 + (1.0 - lam) * p2


@dataclass
class MixtureWeight:
    """Fitted interpolation weight on the first model."""

    lam: float
    loglik: float
    iterations: int
    history: list[float] = field(default_factory=list, repr=False)


def fit_mixture_weight(pairs: Sequence[tuple[float, float]],
                       tol: float = 1e-6,
                       max_iter: int = 1000) -> MixtureWeight:
    """EM fit of the mixture weight on held-out character probabilities.

    Each pair holds the two models' probabilities for the same held-out
    character.  Starting from lambda = 0.5, each step sets lambda to the
    mean posterior responsibility of model 1; the held-out log-likelihood
    never decreases.
    """
    if not pairs:
        raise ValueError("no pairs")
    for i, (p1, p2) in enumerate(pairs):
        if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
            raise ValueError(f"pair {i}: probabilities outside [0, 1]")
        if p1 == 0.0 and p2 == 0.0:
            raise ValueError(f"pair {i}: both probabilities are zero")

    def loglik(lam: float) -> float:
        total = 0.0
        for p1, p2 in pairs:
            mix = lam * p1 + (1.0 - lam) * p2
            total += math.log(mix) if mix > 0.0 else -math.inf
        return total

    lam = 0.5
    history = [loglik(lam)]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        post = sum(lam * p1 / (lam * p1 + (1.0 - lam) * p2)
                   for p1, p2 in pairs)
        new_lam = post / len(pairs)
        history.append(loglik(new_lam))
        delta = abs(new_lam - lam)
        lam = new_lam
        if delta < tol:
            break
    return MixtureWeight(lam=lam, loglik=history[-1],
                         iterations=iterations, history=history)
