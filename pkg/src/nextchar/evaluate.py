"""Per-character perplexity and latency measurement.

Works over any character-probability source: the beam engine, a character
n-gram, or a mixture of two sources.  Each raw sentence is normalized to
the symbol set; the scored stream is always the lowercase normalized
sentence, while the conditioning prefix may be recased per the selected
casing mode.  Perplexity is exp of the mean negative log-probability over
every scored character, spaces included, with no end-of-sentence event.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterable

from .backend import Backend, BackendError
from .beam import NoMassError, SearchParams, predict_next_char
from .ngram import CharNGramModel, interpolate
from .text import fold, normalize_cased, simple_case


class EvalError(Exception):
    """Evaluation could not produce a report.

    When an evaluation aborts mid-run (backend failure) the partial
    report, if any, is attached as ``partial``.
    """

    def __init__(self, message: str, partial: "EvalReport | None" = None):
        super().__init__(message)
        self.partial = partial


class BeamSource:
    """Character probabilities from the beam engine.

    The harness owns the casing of the prefix, so searches run with
    casing_mode "as-given" regardless of the params handed in.
    """

    def __init__(self, backend: Backend, params: SearchParams = SearchParams()):
        self.backend = backend
        self.params = replace(params, casing_mode="as-given")

    def char_logprob(self, prefix: str, char: str) -> float:
        try:
            dist = predict_next_char(self.backend, prefix, self.params)
        except NoMassError:
            return -math.inf
        p = dist.probs.get(fold(char), 0.0)
        return math.log(p) if p > 0.0 else -math.inf


class NGramSource:
    """Character probabilities from a trained character n-gram."""

    def __init__(self, model: CharNGramModel):
        self.model = model

    def char_logprob(self, prefix: str, char: str) -> float:
        return self.model.logprob(prefix, fold(char))


class MixtureSource:
    """Linear interpolation of two character-probability sources."""

    def __init__(self, first, second, lam: float):
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {lam}")
        self.first = first
        self.second = second
        self.lam = lam

    def char_logprob(self, prefix: str, char: str) -> float:
        p1 = math.exp(self.first.char_logprob(prefix, char))
        p2 = math.exp(self.second.char_logprob(prefix, char))
        p = interpolate(p1, p2, self.lam)
        return math.log(p) if p > 0.0 else -math.inf


@dataclass
class SentenceScore:
    text: str
    char_count: int
    logprob_sum: float
    floored: int


@dataclass
class EvalReport:
    model: str
    params: str
    per_char_perplexity: float
    char_count: int
    sentence_count: int
    floored_events: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    sentences: list[SentenceScore] | None = field(default=None, repr=False)


def _percentile(sorted_values: list[float], q: float) -> float:
    # Nearest-rank; sorted_values must be non-empty.
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


def _casing_prefix(cased: str, scored: str, i: int, mode: str) -> str:
    if mode == "none":
        return scored[:i]
    if mode == "simple":
        return simple_case(scored[:i])
    if mode == "as-given":
        return cased[:i]
    raise ValueError(f"unknown casing mode {mode!r}")


def evaluate_perplexity(source, sentences: Iterable[str],
                        casing: str = "none", floor: float = 1e-10,
                        keep_sentences: bool = False, model: str = "",
                        params: str = "") -> EvalReport:
    """Score a raw sentence stream against a character-probability source.

    Zero-probability (or no-mass) predictions are floored to ``floor`` and
    counted in ``floored_events``, contributing exactly -ln(floor) each.
    Timing is captured per prediction from a monotonic clock.
    """
    if not 0.0 < floor < 1.0:
        raise ValueError(f"floor must be in (0, 1), got {floor}")
    log_floor = math.log(floor)
    total_lp = 0.0
    n_chars = 0
    n_sentences = 0
    floored = 0
    times_ms: list[float] = []
    rows: list[SentenceScore] = []
    try:
        for raw in sentences:
            cased = normalize_cased(raw)
            scored = cased.lower()
            if not scored:
                continue
            sent_lp = 0.0
            sent_floored = 0
            for i, ch in enumerate(scored):
                prefix = _casing_prefix(cased, scored, i, casing)
                t0 = time.perf_counter()
                lp = source.char_logprob(prefix, ch)
                times_ms.append((time.perf_counter() - t0) * 1000.0)
                if lp == -math.inf:
                    lp = log_floor
                    sent_floored += 1
                sent_lp += lp
            total_lp += sent_lp
            n_chars += len(scored)
            floored += sent_floored
            n_sentences += 1
            if keep_sentences:
                rows.append(SentenceScore(scored, len(scored), sent_lp,
                                          sent_floored))
    except BackendError as e:
        partial = None
        if n_chars:
            partial = _make_report(model, params, total_lp, n_chars,
                                   n_sentences, floored, times_ms,
                                   rows if keep_sentences else None)
        raise EvalError(
            f"backend failed after {n_sentences} sentences: {e}",
            partial=partial) from e
    if n_chars == 0:
        raise EvalError("no sentences")
    return _make_report(model, params, total_lp, n_chars, n_sentences,
                        floored, times_ms, rows if keep_sentences else None)


def _make_report(model, params, total_lp, n_chars, n_sentences, floored,
                 times_ms, rows) -> EvalReport:
    ordered = sorted(times_ms)
    mid = len(ordered) // 2
    median = (ordered[mid] if len(ordered) % 2
              else (ordered[mid - 1] + ordered[mid]) / 2.0)
    return EvalReport(
        model=model,
        params=params,
        per_char_perplexity=math.exp(-total_lp / n_chars),
        char_count=n_chars,
        sentence_count=n_sentences,
        floored_events=floored,
        mean_ms=sum(ordered) / len(ordered),
        median_ms=median,
        p95_ms=_percentile(ordered, 0.95),
        sentences=rows,
    )


_COLUMNS = ("model", "params", "perplexity", "N", "floored",
            "mean_ms", "p95_ms")


def _row_values(report: EvalReport) -> list[str]:
    return [
        report.model,
        report.params,
        f"{report.per_char_perplexity:.3f}",
        str(report.char_count),
        str(report.floored_events),
        f"{report.mean_ms:.1f}",
        f"{report.p95_ms:.1f}",
    ]


def emit_report(report: EvalReport, fmt: str = "tsv") -> str:
    """Render a report; perplexity to 3 decimals, milliseconds to 1."""
    values = _row_values(report)
    if fmt == "tsv":
        return "\t".join(_COLUMNS) + "\n" + "\t".join(values) + "\n"
    if fmt == "markdown":
        header = "| " + " | ".join(_COLUMNS) + " |"
        rule = "|" + "|".join(" --- " for _ in _COLUMNS) + "|"
        row = "| " + " | ".join(values) + " |"
        return "\n".join([header, rule, row]) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
