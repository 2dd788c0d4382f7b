"""The 28-character symbol set, case folding, and text normalization.

Every prediction the engine makes is a distribution over these 28 symbols:
the lowercase letters a-z, the space, and the apostrophe.  All matching is
done after folding characters into this set; characters that cannot be
folded (digits, punctuation, accented letters, ...) have no canonical
symbol and never match.
"""

from __future__ import annotations

import string

SYMBOLS: str = string.ascii_lowercase + " '"

_FOLD: dict[str, str] = {c: c for c in SYMBOLS}
_FOLD.update({c: c.lower() for c in string.ascii_uppercase})

SYMBOL_SET: frozenset[str] = frozenset(SYMBOLS)


def fold(c: str) -> str | None:
    """Canonical symbol for a character, or None if it has none.

    Defined for a-z (identity), A-Z (lowercased), space, and apostrophe.
    """
    return _FOLD.get(c)


def fold_text(s: str) -> str:
    """Fold each character of ``s``; unfoldable characters pass through.

    Unfoldable characters are outside the symbol set, so after folding they
    can never equal a symbol.  Callers that require fully foldable input
    must check separately.
    """
    return "".join(_FOLD.get(c, c) for c in s)


def normalize_cased(s: str) -> str:
    """Normalization that keeps letter case.

    Removes every character that is not an ASCII letter, apostrophe, or
    space, collapses space runs, and trims.  ``normalize_text`` is this
    plus lowercasing; keeping the two aligned guarantees both forms have
    the same length position by position.
    """
    kept = []
    for c in s:
        if ("a" <= c <= "z") or ("A" <= c <= "Z") or c == "'":
            kept.append(c)
        elif c == " ":
            if kept and kept[-1] == " ":
                continue
            kept.append(" ")
    out = "".join(kept)
    return out.strip(" ")


def normalize_text(s: str) -> str:
    """Lowercase and strip ``s`` down to the symbol set.

    Anything that is not a letter, apostrophe, or space is removed; runs
    of spaces collapse to one; leading/trailing spaces are trimmed.  An
    empty result signals the caller should skip the sentence.
    """
    return normalize_cased(s).lower()


_PRONOUNS = frozenset({"i", "i'm", "i'll", "i've", "i'd"})


def simple_case(s: str) -> str:
    """Heuristic casing of a normalized lowercase string.

    Uppercases the first alphabetic character and the leading letter of
    the whole words i, i'm, i'll, i've, and i'd (word boundary = space or
    string edge).  Pure string transform; idempotent.
    """
    words = s.split(" ")
    out = " ".join("I" + w[1:] if w in _PRONOUNS else w for w in words)
    for idx, ch in enumerate(out):
        if ch.isalpha():
            return out[:idx] + ch.upper() + out[idx + 1 :]
    return out
