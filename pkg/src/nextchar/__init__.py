"""Character predictions from subword language models.

Converts any token-level language model into a normalized probability
distribution over the next typed character, for letter-by-letter text
entry.  Ships a Witten-Bell character n-gram baseline, model
interpolation, a perplexity/latency evaluation harness, and corpus
preparation utilities.
"""

from .backend import (ALL, Backend, BackendError, TokenNGramBackend,
                      TrainingError, UnsupportedOperation,
                      load_token_ngram, save_token_ngram, train_token_ngram)
from .beam import (CharDistribution, ContextError, Hypothesis, NoMassError,
                   PreparedContext, SearchParams, predict_next_char,
                   prepare_context, sequence_char_logprobs)
from .corpus import (CorpusStats, FilterConfig, ScoredSentence,
                     ScoreFileError, corpus_stats, dedup_stream,
                     filter_sentence, read_scored_tsv, select_by_threshold,
                     split_corpus)
from .evaluate import (BeamSource, EvalError, EvalReport, MixtureSource,
                       NGramSource, emit_report, evaluate_perplexity)
from .ngram import (CharNGramModel, MixtureWeight, fit_mixture_weight,
                    interpolate, train_char_ngram)
from .remote import RemoteBackend
from .text import SYMBOLS, fold, normalize_text, simple_case
from .vocab import TokenVocab, TokenizeError, VocabError, load_vocab, save_vocab

__version__ = "0.1.0"

__all__ = [
    "ALL", "Backend", "BackendError", "BeamSource", "CharDistribution",
    "CharNGramModel", "ContextError", "CorpusStats", "EvalError",
    "EvalReport", "FilterConfig", "Hypothesis", "MixtureSource",
    "MixtureWeight", "NGramSource", "NoMassError", "PreparedContext",
    "RemoteBackend", "SYMBOLS", "ScoreFileError", "ScoredSentence",
    "SearchParams", "TokenNGramBackend", "TokenVocab", "TokenizeError",
    "TrainingError", "UnsupportedOperation", "VocabError", "corpus_stats",
    "dedup_stream", "emit_report", "evaluate_perplexity", "filter_sentence",
    "fit_mixture_weight", "fold", "interpolate", "load_token_ngram",
    "load_vocab", "normalize_text", "predict_next_char", "prepare_context",
    "read_scored_tsv", "save_token_ngram", "save_vocab",
    "select_by_threshold", "sequence_char_logprobs", "simple_case",
    "split_corpus", "train_char_ngram", "train_token_ngram",
]
