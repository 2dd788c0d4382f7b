"""Next-character prediction by beam search over token continuations.

A subword model emits probabilities per token, not per character.  To get
the distribution over the next typed character, the engine drops the
tokens of the current partial word (the *volatile suffix*: the last space
plus whatever follows it), then searches over token sequences that
regenerate that suffix and emit at least one character beyond it.  Each
completed sequence deposits its probability mass into the bucket of the
symbol that directly follows the context; the buckets are normalized to
a distribution over the 28-symbol set.

The search is breadth-first with one batched backend query per round.
The frontier is pruned to ``beam_width`` hypotheses after every round and
the search stops once ``max_completed`` finished hypotheses have been
collected (the round in progress is allowed to finish).

When every matchable token is a single symbol the tokenization of the
context can never be rearranged by the next character, so the whole
context is treated as stable and the answer is read off one backend
query.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .backend import ALL, Backend
from .text import fold, simple_case
from .vocab import TokenizeError, TokenVocab


class ContextError(Exception):
    """The context contains a character with no canonical symbol."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class NoMassError(Exception):
    """The search found no completable token path (zero total mass)."""


@dataclass(frozen=True)
class SearchParams:
    """Tuning knobs for the search.

    ``context_prefix``, when given, is used in place of the BOS token
    (include the BOS id in it explicitly if both are wanted).
    ``casing_mode`` controls how the raw context string is cased before
    tokenization: "none" lowercases it, "simple" applies the pronoun
    casing heuristic, "as-given" trusts the caller's casing.
    """

    beam_width: int = 8
    max_completed: int = 32768
    context_prefix: tuple[int, ...] | None = None
    casing_mode: str = "none"

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError(f"beam_width must be >= 1, got {self.beam_width}")
        if self.max_completed < 1:
            raise ValueError(
                f"max_completed must be >= 1, got {self.max_completed}")
        if self.casing_mode not in ("none", "simple", "as-given"):
            raise ValueError(f"unknown casing_mode {self.casing_mode!r}")


@dataclass(frozen=True)
class PreparedContext:
    """Context split into retokenizable-stable tokens and volatile text."""

    stable_tokens: tuple[int, ...]
    volatile_suffix: str


@dataclass(frozen=True)
class Hypothesis:
    """A partial token continuation in the beam."""

    ext: tuple[int, ...]   # token ids appended beyond the stable tokens
    matched: int           # characters of the volatile suffix regenerated
    logprob: float         # accumulated natural-log probability


@dataclass
class CharDistribution:
    """Normalized next-character distribution plus search accounting."""

    probs: dict[str, float]
    mass_found: float
    completed_count: int
    backend_queries: int
    elapsed_ms: float = field(default=0.0)

    def top(self, k: int) -> list[tuple[str, float]]:
        ranked = sorted(self.probs.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:k]


def _apply_casing(context: str, mode: str) -> str:
    if mode == "none":
        return context.lower()
    if mode == "simple":
        return simple_case(context.lower())
    return context


def prepare_context(backend: Backend, context: str,
                    params: SearchParams = SearchParams()) -> PreparedContext:
    """Case the context, split it at the last space, tokenize the stable part.

    The volatile suffix keeps its leading space (space-initial tokens own
    it); a spaceless context is entirely volatile.  Character-level
    vocabularies take the degenerate path: the whole context is stable and
    the suffix is empty.  The stable text is tokenized by the backend's
    own tokenizer when it has one, else by greedy longest-prefix match.
    """
    cased = _apply_casing(context, params.casing_mode)
    for i, c in enumerate(cased):
        if fold(c) is None:
            raise ContextError(
                f"character {c!r} at offset {i} has no canonical symbol",
                offset=i)
    vocab = backend.vocab
    prefix = (params.context_prefix if params.context_prefix is not None
              else (vocab.bos_id,))
    if vocab.char_token is not None:
        # One token per symbol: the next character can never rearrange
        # the tokenization, so the whole context is stable.
        ids = []
        for i, c in enumerate(cased):
            tid = vocab.char_token.get(fold(c))
            if tid is None:
                raise TokenizeError(
                    f"no token covers {c!r} at offset {i}", offset=i)
            ids.append(tid)
        return PreparedContext(tuple(prefix) + tuple(ids), "")
    cut = cased.rfind(" ")
    if cut < 0:
        stable_text, suffix = "", cased
    else:
        stable_text, suffix = cased[:cut], cased[cut:]
    if stable_text:
        if backend.authoritative_tokenize:
            ids = backend.tokenize(stable_text)
        else:
            ids = vocab.greedy_tokenize(stable_text)
    else:
        ids = []
    return PreparedContext(tuple(prefix) + tuple(ids), suffix)


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def predict_next_char(backend: Backend, context: str,
                      params: SearchParams = SearchParams()
                      ) -> CharDistribution:
    """Distribution over the next character given the typed context.

    One batched backend query per search round; log-space accumulation
    throughout (32K completions underflow in linear space).  Raises
    ``NoMassError`` if no token path regenerates the suffix.
    """
    t0 = time.perf_counter()
    prep = prepare_context(backend, context, params)
    vocab: TokenVocab = backend.vocab
    suffix = prep.volatile_suffix
    length = len(suffix)
    first_chars = vocab.first_char_items()

    frontier = [Hypothesis((), 0, 0.0)]
    buckets: dict[str, float] = {}
    completed = 0
    queries = 0
    while frontier and completed < params.max_completed:
        live: list[Hypothesis] = []
        items = []
        plans = []
        for hyp in frontier:
            if hyp.matched == length:
                # Everything completes; ask for the full row once.
                items.append((prep.stable_tokens + hyp.ext, ALL))
                plans.append(None)
                live.append(hyp)
            else:
                cand = vocab.match_candidates(suffix, hyp.matched)
                if not cand.continuing and not cand.completing:
                    continue  # dead branch, not worth a query
                ids = [tid for tid, _ in cand.continuing]
                ids += [tid for tid, _ in cand.completing]
                items.append((prep.stable_tokens + hyp.ext, ids))
                plans.append(cand)
                live.append(hyp)
        if not items:
            break
        rows = backend.next_token_logprobs(items)
        queries += 1

        grown: list[Hypothesis] = []
        for hyp, plan, row in zip(live, plans, rows):
            if plan is None:
                for tid, ch in first_chars:
                    lp = hyp.logprob + row[tid]
                    if lp > -math.inf:
                        buckets[ch] = _logaddexp(buckets.get(ch, -math.inf), lp)
                    completed += 1
            else:
                k = 0
                for tid, new_pos in plan.continuing:
                    lp = hyp.logprob + row[k]
                    k += 1
                    if lp > -math.inf:
                        grown.append(Hypothesis(hyp.ext + (tid,), new_pos, lp))
                for tid, ch in plan.completing:
                    lp = hyp.logprob + row[k]
                    k += 1
                    if lp > -math.inf:
                        buckets[ch] = _logaddexp(buckets.get(ch, -math.inf), lp)
                    completed += 1
        if len(grown) > params.beam_width:
            grown.sort(key=lambda h: (-h.logprob, h.ext))
            del grown[params.beam_width:]
        frontier = grown

    if not buckets:
        raise NoMassError(
            f"no token path regenerates {suffix!r}; nothing to normalize")
    total = -math.inf
    for lp in buckets.values():
        total = _logaddexp(total, lp)
    probs = {ch: math.exp(lp - total) for ch, lp in buckets.items()}
    return CharDistribution(
        probs=probs,
        mass_found=math.exp(total),
        completed_count=completed,
        backend_queries=queries,
        elapsed_ms=(time.perf_counter() - t0) * 1000.0,
    )


def sequence_char_logprobs(backend: Backend, sentence: str,
                           params: SearchParams = SearchParams()
                           ) -> list[tuple[str, float]]:
    """Per-position character log-probabilities over growing prefixes.

    ``sentence`` must already be normalized to the symbol set.  Entry
    ``i`` scores ``sentence[i]`` given the prefix before it (cased per
    ``params.casing_mode``).  No end-of-sentence event is scored; a
    character with zero probability (or a prefix with no mass at all)
    yields a ``-inf`` entry for the caller to handle.
    """
    if not sentence:
        raise ValueError("empty sentence")
    out: list[tuple[str, float]] = []
    for i, ch in enumerate(sentence):
        sym = fold(ch)
        if sym is None:
            raise ContextError(
                f"character {ch!r} at offset {i} has no canonical symbol",
                offset=i)
        try:
            dist = predict_next_char(backend, sentence[:i], params)
            p = dist.probs.get(sym, 0.0)
        except NoMassError:
            p = 0.0
        out.append((sym, math.log(p) if p > 0.0 else -math.inf))
    return out
