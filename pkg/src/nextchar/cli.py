"""Command-line interface.

Subcommands: predict, demo, eval, train-char-ngram, train-token-ngram,
prep-filter, prep-select, prep-split, prep-stats, fit-mix.  Exit status is
0 on success, 1 on usage errors, 2 on data or backend errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .backend import (Backend, BackendError, TrainingError, load_token_ngram,
                      save_token_ngram, train_token_ngram)
from .beam import ContextError, NoMassError, SearchParams, predict_next_char
from .corpus import (FilterConfig, ScoreFileError, corpus_stats, dedup_stream,
                     filter_sentence, read_scored_tsv, select_by_threshold,
                     split_corpus)
from .evaluate import (BeamSource, EvalError, MixtureSource, NGramSource,
                       emit_report, evaluate_perplexity)
from .ngram import CharNGramModel, fit_mixture_weight, train_char_ngram
from .remote import RemoteBackend
from .text import SYMBOLS, normalize_text
from .vocab import TokenizeError, VocabError, load_vocab

CONFIG_ENV = "NEXTCHAR_CONFIG"

USAGE_ERROR = 1
DATA_ERROR = 2


class CliError(Exception):
    """User-facing failure; message printed to stderr, exit 2."""


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as f:
            return [line.rstrip("\n") for line in f]
    except OSError as e:
        raise CliError(str(e)) from e


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def _show_symbol(ch: str) -> str:
    return "<space>" if ch == " " else ch


def _add_backend_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--model", help="builtin token n-gram model file")
    g.add_argument("--backend-cmd",
                   help="command line of a wire-protocol backend (stdio)")
    g.add_argument("--backend-addr", metavar="HOST:PORT",
                   help="address of a wire-protocol backend (TCP)")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam", type=int, default=8, help="beam width")
    p.add_argument("--max-completed", type=int, default=32768,
                   help="completed-hypothesis stopping criterion")
    p.add_argument("--casing", choices=["none", "simple", "as-given"],
                   default="none", help="casing applied to the context")


def _open_backend(args) -> Backend:
    try:
        if args.model:
            return load_token_ngram(args.model)
        if args.backend_cmd:
            return RemoteBackend.launch(args.backend_cmd)
        host, _, port = args.backend_addr.rpartition(":")
        return RemoteBackend.connect(host, int(port))
    except (OSError, ValueError, VocabError, BackendError) as e:
        raise CliError(f"cannot open backend: {e}") from e


def _search_params(args) -> SearchParams:
    return SearchParams(beam_width=args.beam,
                        max_completed=args.max_completed,
                        casing_mode=args.casing)


def cmd_predict(args) -> int:
    with _open_backend(args) as backend:
        try:
            dist = predict_next_char(backend, args.context,
                                     _search_params(args))
        except (NoMassError, ContextError, TokenizeError, BackendError) as e:
            raise CliError(str(e)) from e
    full = {ch: dist.probs.get(ch, 0.0) for ch in SYMBOLS}
    if args.json:
        print(json.dumps({
            "command": "predict",
            "context": args.context,
            "probs": full,
            "mass_found": dist.mass_found,
            "completed_count": dist.completed_count,
            "backend_queries": dist.backend_queries,
            "elapsed_ms": dist.elapsed_ms,
        }))
    else:
        for ch, p in sorted(full.items(), key=lambda kv: (-kv[1], kv[0])):
            print(f"{_show_symbol(ch)}\t{p:.6f}")
        print(f"# completed={dist.completed_count} "
              f"queries={dist.backend_queries} "
              f"elapsed={dist.elapsed_ms:.1f}ms", file=sys.stderr)
    return 0


def cmd_demo(args) -> int:
    params = _search_params(args)
    with _open_backend(args) as backend:
        context = ""
        print("Type to extend the context; :clear resets, :quit exits.",
              file=sys.stderr)
        while True:
            try:
                line = input("> ")
            except EOFError:
                break
            if line == ":quit":
                break
            if line == ":clear":
                context = ""
                continue
            context = normalize_text(context + line)
            try:
                dist = predict_next_char(backend, context, params)
            except (NoMassError, TokenizeError, BackendError) as e:
                print(f"! {e}", file=sys.stderr)
                continue
            ranked = " ".join(f"{_show_symbol(c)}:{p:.3f}"
                              for c, p in dist.top(args.top))
            print(f"[{context}] -> {ranked}")
    return 0


def _char_source(args, backend):
    if args.source == "beam":
        return BeamSource(backend, _search_params(args))
    if args.source == "char-ngram":
        return NGramSource(CharNGramModel.load(args.char_model))
    first = BeamSource(backend, _search_params(args))
    second = NGramSource(CharNGramModel.load(args.char_model))
    return MixtureSource(first, second, args.mix_lambda)


def cmd_eval(args) -> int:
    sentences = _read_lines(args.corpus)
    needs_backend = args.source in ("beam", "mix")
    if args.source in ("char-ngram", "mix") and not args.char_model:
        raise CliError(f"--char-model is required with --source {args.source}")
    if needs_backend and not (args.model or args.backend_cmd
                              or args.backend_addr):
        raise CliError(f"a backend is required with --source {args.source}")
    backend = _open_backend(args) if needs_backend else None
    try:
        source = _char_source(args, backend)
        report = evaluate_perplexity(
            source, sentences, casing=args.casing, floor=args.floor,
            keep_sentences=args.per_sentence,
            model=args.source, params=f"beam={args.beam},"
            f"max_completed={args.max_completed},casing={args.casing}")
    except (EvalError, TrainingError, OSError) as e:
        raise CliError(str(e)) from e
    finally:
        if backend is not None:
            backend.close()
    if args.json:
        doc = {
            "command": "eval",
            "model": report.model,
            "params": report.params,
            "perplexity": report.per_char_perplexity,
            "char_count": report.char_count,
            "sentence_count": report.sentence_count,
            "floored_events": report.floored_events,
            "mean_ms": report.mean_ms,
            "median_ms": report.median_ms,
            "p95_ms": report.p95_ms,
        }
        if args.per_sentence:
            doc["sentences"] = [
                {"text": s.text, "chars": s.char_count,
                 "logprob": s.logprob_sum, "floored": s.floored}
                for s in report.sentences
            ]
        print(json.dumps(doc))
    else:
        sys.stdout.write(emit_report(report, args.format))
        if args.per_sentence:
            for s in report.sentences:
                print(f"# {s.logprob_sum:.4f}\t{s.char_count}\t{s.text}")
    return 0


def cmd_train_char_ngram(args) -> int:
    lines = _read_lines(args.corpus)
    normalized = (normalize_text(line) for line in lines)
    try:
        model = train_char_ngram((s for s in normalized if s), args.order)
    except TrainingError as e:
        raise CliError(str(e)) from e
    model.save(args.out)
    if args.json:
        print(json.dumps({"command": "train-char-ngram", "order": args.order,
                          "out": args.out}))
    else:
        print(f"wrote {args.out} (order {args.order})")
    return 0


def cmd_train_token_ngram(args) -> int:
    try:
        vocab = load_vocab(args.vocab)
    except VocabError as e:
        raise CliError(str(e)) from e
    lines = [line for line in _read_lines(args.corpus) if line]
    try:
        backend = train_token_ngram(lines, vocab, args.order)
    except (TrainingError, TokenizeError) as e:
        raise CliError(str(e)) from e
    save_token_ngram(backend, args.out)
    if args.json:
        print(json.dumps({"command": "train-token-ngram", "order": args.order,
                          "out": args.out}))
    else:
        print(f"wrote {args.out} (order {args.order})")
    return 0


def cmd_prep_filter(args) -> int:
    wordlist = frozenset(w.strip().lower() for w in _read_lines(args.wordlist)
                         if w.strip()) if args.wordlist else frozenset()
    # Without a wordlist the OOV rule cannot apply; disable it.
    cfg = FilterConfig(wordlist=wordlist,
                       max_oov_fraction=args.max_oov if args.wordlist else 1.0)
    lines = _read_lines(args.infile)
    kept = []
    reasons: dict[str, int] = {}
    for line in lines:
        if not line:
            continue
        reason = filter_sentence(line, cfg)
        if reason is None:
            kept.append(line)
        else:
            key = reason.split()[0]
            reasons[key] = reasons.get(key, 0) + 1
    if args.dedup:
        kept = list(dedup_stream(kept))
    _write_lines(args.out, kept)
    summary = {"command": "prep-filter", "kept": len(kept),
               "rejected": reasons, "out": args.out}
    print(json.dumps(summary) if args.json else
          f"kept {len(kept)} -> {args.out} (rejected: {reasons or 'none'})")
    return 0


def cmd_prep_select(args) -> int:
    try:
        kept = [row.text for row in
                select_by_threshold(read_scored_tsv(_read_lines(args.scores)),
                                    args.threshold)]
    except (ScoreFileError, ValueError) as e:
        raise CliError(str(e)) from e
    _write_lines(args.out, kept)
    print(json.dumps({"command": "prep-select", "kept": len(kept),
                      "threshold": args.threshold, "out": args.out})
          if args.json else f"kept {len(kept)} -> {args.out}")
    return 0


def cmd_prep_split(args) -> int:
    lines = [line for line in _read_lines(args.infile) if line]
    parts = split_corpus(lines, args.seed)
    for name, rows in parts.items():
        _write_lines(f"{args.out_prefix}.{name}", rows)
    sizes = {name: len(rows) for name, rows in parts.items()}
    print(json.dumps({"command": "prep-split", "seed": args.seed,
                      "sizes": sizes}) if args.json else
          f"split (seed {args.seed}): {sizes}")
    return 0


def cmd_prep_stats(args) -> int:
    stats = corpus_stats(line for line in _read_lines(args.infile) if line)
    doc = {
        "command": "prep-stats",
        "sentence_count": stats.sentence_count,
        "words_per_sentence": stats.words_per_sentence,
        "chars_per_sentence": stats.chars_per_sentence,
        "type_fractions": stats.type_fractions,
    }
    if args.json:
        print(json.dumps(doc))
    else:
        print(f"sentences\t{stats.sentence_count}")
        print(f"words/sentence\t{stats.words_per_sentence:.2f}")
        print(f"chars/sentence\t{stats.chars_per_sentence:.2f}")
        for kind, frac in stats.type_fractions.items():
            print(f"{kind}\t{frac:.3f}")
    return 0


def cmd_fit_mix(args) -> int:
    pairs = []
    for lineno, line in enumerate(_read_lines(args.pairs), start=1):
        if not line.strip():
            continue
        cols = line.split()
        if len(cols) != 2:
            raise CliError(f"line {lineno}: expected two probabilities")
        try:
            pairs.append((float(cols[0]), float(cols[1])))
        except ValueError as e:
            raise CliError(f"line {lineno}: {e}") from e
    try:
        fit = fit_mixture_weight(pairs, tol=args.tol, max_iter=args.max_iter)
    except ValueError as e:
        raise CliError(str(e)) from e
    if args.json:
        print(json.dumps({"command": "fit-mix", "lambda": fit.lam,
                          "loglik": fit.loglik,
                          "iterations": fit.iterations}))
    else:
        print(f"lambda\t{fit.lam:.6f}")
        print(f"loglik\t{fit.loglik:.6f}")
        print(f"iterations\t{fit.iterations}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nextchar",
        description="Character predictions from subword language models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="print the next-character distribution")
    _add_backend_flags(p)
    _add_search_flags(p)
    p.add_argument("--context", required=True, help="typed context so far")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("demo", help="interactive prediction loop")
    _add_backend_flags(p)
    _add_search_flags(p)
    p.add_argument("--top", type=int, default=5,
                   help="ranked symbols to display")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("eval", help="per-character perplexity report")
    _add_backend_flags(p, required=False)
    _add_search_flags(p)
    p.add_argument("--corpus", required=True,
                   help="UTF-8 file, one sentence per line")
    p.add_argument("--source", choices=["beam", "char-ngram", "mix"],
                   default="beam")
    p.add_argument("--char-model", help="character n-gram model file")
    p.add_argument("--mix-lambda", type=float, default=0.5,
                   help="weight on the beam source in mix mode")
    p.add_argument("--floor", type=float, default=1e-10,
                   help="probability floor for zero/no-mass events")
    p.add_argument("--format", choices=["tsv", "markdown"], default="tsv")
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-char-ngram",
                       help="train the character n-gram baseline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_train_char_ngram)

    p = sub.add_parser("train-token-ngram",
                       help="train the builtin token n-gram backend")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True, help="vocab JSON file")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_train_token_ngram)

    p = sub.add_parser("prep-filter", help="apply sentence filtering rules")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--wordlist", help="known-word list, one per line")
    p.add_argument("--max-oov", type=float, default=0.20)
    p.add_argument("--dedup", action="store_true",
                   help="drop repeated identical sentences")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prep_filter)

    p = sub.add_parser("prep-select",
                       help="select sentences by classifier score")
    p.add_argument("--scores", required=True, help="score TSV file")
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prep_select)

    p = sub.add_parser("prep-split", help="deterministic 90/5/5 split")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prep_split)

    p = sub.add_parser("prep-stats", help="corpus statistics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prep_stats)

    p = sub.add_parser("fit-mix", help="fit the mixture weight by EM")
    p.add_argument("--pairs", required=True,
                   help="file of per-character probability pairs")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit_mix)

    return parser


def _apply_config_defaults(argv: list[str]) -> list[str]:
    """Prepend defaults from the JSON file named by $NEXTCHAR_CONFIG."""
    path = os.environ.get(CONFIG_ENV)
    if not path or not argv:
        return argv
    try:
        with open(path, encoding="utf-8") as f:
            config = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        print(f"nextchar: bad config {path}: {e}", file=sys.stderr)
        return argv
    defaults = config.get(argv[0], {})
    extra: list[str] = []
    for key, value in defaults.items():
        flag = f"--{key}"
        if flag in argv:
            continue
        if value is True:
            extra.append(flag)
        else:
            extra.extend([flag, str(value)])
    return [argv[0]] + extra + argv[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_apply_config_defaults(argv))
    except SystemExit as e:
        # argparse uses status 2 for usage problems; we reserve 2 for
        # data/backend errors.
        return USAGE_ERROR if e.code == 2 else (e.code or 0)
    try:
        return args.func(args)
    except CliError as e:
        print(f"nextchar: {e}", file=sys.stderr)
        return DATA_ERROR
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
