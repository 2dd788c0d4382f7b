"""Shared test machinery: table-driven backends, random vocab generation,
and the exact marginalization oracle the beam search is checked against.

The oracle deliberately reimplements folding, context splitting, and
tokenization from scratch (no trie, no beam, linear-space probabilities)
so it stays independent of the code paths it verifies.
"""

import math
import string

from nextchar.backend import ALL, Backend
from nextchar.vocab import TokenVocab

SYMBOLS28 = set(string.ascii_lowercase + " '")


def _fold(c):
    if "a" <= c <= "z":
        return c
    if "A" <= c <= "Z":
        return c.lower()
    if c in " '":
        return c
    return None


def _fold_key(s):
    return "".join(_fold(c) or c for c in s)


class TableBackend(Backend):
    """Token-bigram table: p(next | previous token id).

    Rows are probability dicts over token ids; missing ids mean zero.
    """

    kind = "table"

    def __init__(self, vocab, rows):
        self.vocab = vocab
        self.rows = rows
        self.query_log = []

    def _row(self, ctx):
        return self.rows[ctx[-1]]

    def next_token_logprobs(self, items):
        out = []
        for ctx, cands in items:
            self.query_log.append((tuple(ctx), cands))
            row = self._row(ctx)
            ids = range(self.vocab.id_bound) if cands == ALL else cands
            out.append([math.log(row[t]) if row.get(t, 0.0) > 0.0 else -math.inf
                        for t in ids])
        return out


def uniform_char_backend(extra_special=()):
    """Character-token vocab over all 28 symbols, uniform 1/28 rows."""
    tokens = [(0, "<s>")] + [(i + 1, c)
                             for i, c in enumerate(sorted(SYMBOLS28))]
    vocab = TokenVocab(tokens, 0, {0, *extra_special})
    p = 1.0 / 28.0
    row = {tid: p for tid, _ in tokens[1:]}
    rows = {tid: row for tid, _ in tokens}
    return TableBackend(vocab, rows)


def random_bigram_instance(rng, max_extra_tokens=12, alphabet="ab",
                           allow_zero=True):
    """A random small vocab plus a random token-bigram table.

    Single-character tokens for every alphabet letter and the space are
    always present so that any context over the alphabet is tokenizable
    and any suffix is regenerable.
    """
    singles = list(alphabet) + [" "]
    surfaces = list(singles)
    for _ in range(rng.randrange(max_extra_tokens + 1)):
        lead = rng.random() < 0.5
        body = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 4)))
        surfaces.append((" " if lead else "") + body)
    tokens = [(0, "<s>")] + [(i + 1, s) for i, s in enumerate(surfaces)]
    vocab = TokenVocab(tokens, 0, {0})
    rows = {}
    for tid, _ in tokens:
        weights = {}
        for wid in vocab.matchable_ids:
            if allow_zero and rng.random() < 0.15:
                continue
            weights[wid] = rng.random() + 1e-3
        if not weights:
            weights = {wid: 1.0 for wid in vocab.matchable_ids}
        total = sum(weights.values())
        rows[tid] = {wid: w / total for wid, w in weights.items()}
    return TableBackend(vocab, rows)


def random_context(rng, alphabet="ab", max_words=3, max_word_len=3):
    words = [
        "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, max_word_len + 1)))
        for _ in range(rng.randrange(max_words + 1))
    ]
    ctx = " ".join(words)
    if words and rng.random() < 0.3:
        ctx += " "
    return ctx


def exact_char_marginal(backend, context):
    """Brute-force next-character marginal by full path enumeration.

    Splits at the last space, tokenizes the stable text by longest match
    (linear scan), then recursively enumerates every token sequence whose
    folded surfaces regenerate the folded suffix, crediting the symbol
    right after the context.  Exponential; small vocabularies only.
    """
    vocab = backend.vocab
    folded_surface = {tid: _fold_key(vocab.surface(tid))
                      for tid in vocab.matchable_ids}
    lowered = context.lower()
    cut = lowered.rfind(" ")
    if cut < 0:
        stable_text, suffix = "", lowered
    else:
        stable_text, suffix = lowered[:cut], lowered[cut:]

    stable = [vocab.bos_id]
    i = 0
    while i < len(stable_text):
        best = None
        best_len = 0
        for tid in vocab.matchable_ids:
            s = vocab.surface(tid)
            if stable_text.startswith(s, i):
                if len(s) > best_len or (len(s) == best_len and tid < best):
                    best, best_len = tid, len(s)
        assert best is not None, f"untokenizable stable text {stable_text!r}"
        stable.append(best)
        i += best_len

    folded_suffix = "".join(_fold(c) for c in suffix)
    buckets = {}

    def expand(ctx, pos, mass):
        [row] = backend.next_token_logprobs([(ctx, ALL)])
        rem = folded_suffix[pos:]
        for tid in vocab.matchable_ids:
            lp = row[tid]
            if lp == -math.inf:
                continue
            p = mass * math.exp(lp)
            s = folded_surface[tid]
            if len(s) > len(rem):
                if s.startswith(rem):
                    ch = s[len(rem)]
                    if ch in SYMBOLS28:
                        buckets[ch] = buckets.get(ch, 0.0) + p
            elif rem.startswith(s):
                expand(ctx + (tid,), pos + len(s), p)

    expand(tuple(stable), 0, 1.0)
    total = sum(buckets.values())
    if total == 0.0:
        return {}
    return {ch: p / total for ch, p in buckets.items()}


def assert_dists_close(got, want, tol):
    keys = set(got) | set(want)
    for ch in keys:
        a = got.get(ch, 0.0)
        b = want.get(ch, 0.0)
        assert abs(a - b) <= tol, (
            f"symbol {ch!r}: got {a}, want {b} (diff {abs(a - b):.3g})")
