"""Subword token vocabulary: loading, greedy tokenization, prefix matching.

The vocabulary owns a case-folded prefix trie over token surfaces.  The
search engine queries it with the volatile suffix of the typed context and
a position, getting back the tokens that keep matching the suffix and the
tokens that run past its end (together with the symbol each one would
emit next).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .text import SYMBOL_SET, fold


class VocabError(Exception):
    """Raised when a vocabulary file or definition is invalid."""


class TokenizeError(Exception):
    """Raised when text cannot be segmented with the vocabulary."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class _TrieNode:
    __slots__ = ("children", "terminal", "tokens_below")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.terminal: list[int] = []      # ids whose folded surface ends here
        self.tokens_below: list[int] = []  # all ids in this subtree


def _fold_key(surface: str) -> str:
    # Unfoldable characters stay as-is; they are disjoint from the symbol
    # set, so they can never match a normalized context character.
    return "".join(fold(c) or c for c in surface)


@dataclass(frozen=True)
class Candidates:
    """Result of a prefix-match query at one suffix position."""

    continuing: list[tuple[int, int]]   # (token_id, new_pos into the suffix)
    completing: list[tuple[int, str]]   # (token_id, next symbol it emits)


class TokenVocab:
    """Immutable token inventory with a folded prefix index.

    Safe to share across threads once constructed.
    """

    def __init__(self, tokens: list[tuple[int, str]], bos_id: int,
                 special_ids: set[int]):
        surfaces: dict[int, str] = {}
        for pos, (tid, surface) in enumerate(tokens):
            if tid in surfaces:
                raise VocabError(f"duplicate token id {tid}")
            if tid < 0:
                raise VocabError(f"token record {pos}: negative id {tid}")
            if tid not in special_ids:
                if not surface:
                    raise VocabError(
                        f"token record {pos}: empty non-special surface (id {tid})")
                if " " in surface[1:]:
                    raise VocabError(
                        f"token record {pos}: interior space in surface "
                        f"{surface!r} (id {tid}); only space-initial tokens "
                        f"are supported")
            surfaces[tid] = surface
        if bos_id not in surfaces:
            raise VocabError(f"bos_id {bos_id} is not a token")
        if bos_id not in special_ids:
            raise VocabError(f"bos token {bos_id} must be special")

        self._surfaces = surfaces
        self.bos_id = bos_id
        self.special_ids = frozenset(special_ids)
        self._matchable = sorted(tid for tid in surfaces
                                 if tid not in self.special_ids)

        self._root = _TrieNode()
        first_char: dict[int, str] = {}
        max_len = 0
        by_surface: dict[str, int] = {}
        for tid in self._matchable:
            surface = surfaces[tid]
            max_len = max(max_len, len(surface))
            if surface not in by_surface or tid < by_surface[surface]:
                by_surface[surface] = tid
            node = self._root
            node.tokens_below.append(tid)
            for c in _fold_key(surface):
                node = node.children.setdefault(c, _TrieNode())
                node.tokens_below.append(tid)
            node.terminal.append(tid)
            ch = fold(surface[0])
            if ch is not None:
                first_char[tid] = ch
        self._first_char = first_char
        self._max_surface_len = max_len
        self._by_surface = by_surface
        # Full-vocabulary query rows are indexed by token id, 0..id_bound-1.
        self.id_bound = max(surfaces) + 1

        # Character-level vocabularies admit a one-query prediction path,
        # but only when each symbol maps to exactly one token; duplicated
        # (or case-colliding) surfaces mean distinct token paths condition
        # the model differently and must be marginalized by the search.
        char_token: dict[str, int] | None = {}
        for tid in self._matchable:
            surface = surfaces[tid]
            ch = fold(surface) if len(surface) == 1 else None
            if ch is None or ch in char_token:
                char_token = None
                break
            char_token[ch] = tid
        self.char_token = char_token if char_token else None
        self.is_character_level = self.char_token is not None

    def __len__(self) -> int:
        return len(self._surfaces)

    def __contains__(self, tid: int) -> bool:
        return tid in self._surfaces

    @property
    def matchable_ids(self) -> list[int]:
        """Non-special token ids, ascending."""
        return self._matchable

    def surface(self, tid: int) -> str:
        return self._surfaces[tid]

    def records(self) -> list[tuple[int, str, bool]]:
        """(id, surface, special) for every token, ascending by id."""
        return [(tid, s, tid in self.special_ids)
                for tid, s in sorted(self._surfaces.items())]

    def first_char_items(self) -> list[tuple[int, str]]:
        """(token_id, folded first symbol) for every matchable token whose
        first character folds into the symbol set."""
        return list(self._first_char.items())

    def greedy_tokenize(self, text: str) -> list[int]:
        """Deterministic longest-prefix-match segmentation, case-sensitive.

        Fallback for backends without an authoritative tokenizer; the
        concatenated surfaces always reproduce ``text`` exactly.
        """
        ids: list[int] = []
        i = 0
        n = len(text)
        while i < n:
            for length in range(min(self._max_surface_len, n - i), 0, -1):
                tid = self._by_surface.get(text[i:i + length])
                if tid is not None:
                    ids.append(tid)
                    i += length
                    break
            else:
                raise TokenizeError(
                    f"no token covers {text[i]!r} at offset {i}", offset=i)
        return ids

    def match_candidates(self, suffix: str, from_pos: int) -> Candidates:
        """Tokens matching ``suffix`` from ``from_pos``, case-folded.

        A token *continues* if its folded surface equals the folded suffix
        slice starting at ``from_pos`` and ends at or before the suffix
        end.  It *completes* if its folded surface extends strictly past
        the suffix end; the emitted symbol is the fold of the first excess
        character (tokens whose excess character has no fold are omitted).
        Special tokens never match.  At ``from_pos == len(suffix)`` every
        matchable token completes with its first symbol.
        """
        if not 0 <= from_pos <= len(suffix):
            raise ValueError(f"from_pos {from_pos} outside suffix of length "
                             f"{len(suffix)}")
        continuing: list[tuple[int, int]] = []
        node = self._root
        pos = from_pos
        for c in suffix[from_pos:]:
            ch = fold(c)
            if ch is None:
                node = None
                break
            node = node.children.get(ch)
            if node is None:
                break
            pos += 1
            if node.terminal:
                continuing.extend((tid, pos) for tid in node.terminal)
        completing: list[tuple[int, str]] = []
        if node is not None:
            for ch, child in node.children.items():
                if ch in SYMBOL_SET:
                    completing.extend((tid, ch) for tid in child.tokens_below)
        return Candidates(continuing, completing)


def load_vocab(path: str) -> TokenVocab:
    """Load a vocabulary from its JSON file format.

    Format: ``{"version": 1, "bos_id": int,
    "tokens": [{"id": int, "text": str, "special": bool}, ...]}``.
    """
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise VocabError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(data, dict) or data.get("version") != 1:
        raise VocabError(f"{path}: missing or unsupported version")
    if "bos_id" not in data:
        raise VocabError(f"{path}: missing bos_id")
    records = data.get("tokens")
    if not isinstance(records, list):
        raise VocabError(f"{path}: missing tokens list")
    tokens: list[tuple[int, str]] = []
    special_ids: set[int] = set()
    for i, rec in enumerate(records):
        if (not isinstance(rec, dict) or not isinstance(rec.get("id"), int)
                or not isinstance(rec.get("text"), str)):
            raise VocabError(f"{path}: malformed token record {i}: {rec!r}")
        tokens.append((rec["id"], rec["text"]))
        if rec.get("special", False):
            special_ids.add(rec["id"])
    try:
        return TokenVocab(tokens, data["bos_id"], special_ids)
    except VocabError as e:
        raise VocabError(f"{path}: {e}") from e


def save_vocab(vocab: TokenVocab, path: str) -> None:
    """Write ``vocab`` in the JSON file format ``load_vocab`` reads."""
    records = [{"id": tid, "text": s, "special": sp}
               for tid, s, sp in vocab.records()]
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"version": 1, "bos_id": vocab.bos_id, "tokens": records},
                  f, ensure_ascii=False)
        f.write("\n")
