"""Sentence filtering, dedup, deterministic splits, and corpus statistics."""

from __future__ import annotations

import hashlib
import string
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .text import normalize_text

END_PUNCT = frozenset(".?!")


class ScoreFileError(Exception):
    """A classifier score file row could not be parsed."""


@dataclass(frozen=True)
class FilterConfig:
    wordlist: frozenset[str]
    max_oov_fraction: float = 0.20
    end_punct: frozenset[str] = END_PUNCT

    def __post_init__(self):
        if not 0.0 <= self.max_oov_fraction <= 1.0:
            raise ValueError("max_oov_fraction must be in [0, 1]")


def _strip_edge_punct(word: str) -> str:
    return word.strip(string.punctuation)


def filter_sentence(s: str, cfg: FilterConfig) -> str | None:
    """None if the sentence passes, else the first failed rule.

    Rules: starts with an uppercase letter; has both uppercase and
    lowercase letters; ends with sentence-end punctuation; at most
    ``max_oov_fraction`` of its words are missing from the wordlist
    (words are whitespace tokens, lowercased, edge punctuation stripped).
    """
    if not s or not (s[0].isalpha() and s[0].isupper()):
        return "capital-start"
    if not (any(c.isupper() for c in s) and any(c.islower() for c in s)):
        return "mixed-case"
    if s[-1] not in cfg.end_punct:
        return "end-punct"
    words = [w for w in (_strip_edge_punct(t).lower() for t in s.split())
             if w]
    if words:
        oov = sum(1 for w in words if w not in cfg.wordlist)
        if oov / len(words) > cfg.max_oov_fraction:
            return f"oov {oov}/{len(words)} > {cfg.max_oov_fraction:.2f}"
    return None


def dedup_stream(sentences: Iterable[str]) -> Iterator[str]:
    """Keep first occurrences, drop byte-identical repeats, preserve order."""
    seen: set[str] = set()
    for s in sentences:
        if s in seen:
            continue
        seen.add(s)
        yield s


def _bucket(seed: int, sentence: str) -> float:
    digest = hashlib.sha256(f"{seed}\x00{sentence}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_corpus(sentences: Iterable[str], seed: int
                 ) -> dict[str, list[str]]:
    """Deterministic 90/5/5 train/dev/test split keyed on (seed, sentence)."""
    parts: dict[str, list[str]] = {"train": [], "dev": [], "test": []}
    for s in sentences:
        u = _bucket(seed, s)
        if u < 0.90:
            parts["train"].append(s)
        elif u < 0.95:
            parts["dev"].append(s)
        else:
            parts["test"].append(s)
    return parts


@dataclass(frozen=True)
class ScoredSentence:
    text: str
    p_written: float
    p_spoken: float
    p_other: float


def read_scored_tsv(lines: Iterable[str]) -> Iterator[ScoredSentence]:
    """Parse rows of ``text <TAB> p_written <TAB> p_spoken <TAB> p_other``.

    Tabs are forbidden inside the text column; malformed rows raise with
    their 1-based line number.
    """
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ScoreFileError(
                f"line {lineno}: expected 4 tab-separated columns, "
                f"got {len(cols)}")
        try:
            probs = [float(c) for c in cols[1:]]
        except ValueError as e:
            raise ScoreFileError(f"line {lineno}: bad probability: {e}") from e
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ScoreFileError(f"line {lineno}: probability outside [0, 1]")
        yield ScoredSentence(cols[0], *probs)


def select_by_threshold(scored: Iterable[ScoredSentence], threshold: float
                        ) -> Iterator[ScoredSentence]:
    """Keep rows where the written or spoken score reaches the threshold.

    The comparison is inclusive (>=).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    for row in scored:
        if max(row.p_written, row.p_spoken) >= threshold:
            yield row


@dataclass
class CorpusStats:
    sentence_count: int
    words_per_sentence: float
    chars_per_sentence: float
    type_fractions: dict[str, float] = field(default_factory=dict)


def corpus_stats(sentences: Iterable[str]) -> CorpusStats:
    """Mean words/chars per sentence and question/statement/exclamation mix.

    Words are whitespace tokens; characters are counted on the normalized
    form (spaces included); the sentence type comes from its final
    character (?, !, anything else counts as a statement).
    """
    n = 0
    words = 0
    chars = 0
    kinds = {"question": 0, "statement": 0, "exclamation": 0}
    for s in sentences:
        if not s.strip():
            continue
        n += 1
        words += len(s.split())
        chars += len(normalize_text(s))
        last = s.rstrip()[-1]
        if last == "?":
            kinds["question"] += 1
        elif last == "!":
            kinds["exclamation"] += 1
        else:
            kinds["statement"] += 1
    if n == 0:
        return CorpusStats(0, 0.0, 0.0,
                           {k: 0.0 for k in kinds})
    return CorpusStats(
        sentence_count=n,
        words_per_sentence=words / n,
        chars_per_sentence=chars / n,
        type_fractions={k: v / n for k, v in kinds.items()},
    )
