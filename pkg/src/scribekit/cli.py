"""Command-line entry point wiring the pipeline end to end.

JSON-lines is the interchange format between subcommands; output files are
written to a temp file and renamed so failures leave no partial output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import adapters, corpus, instruct, metrics, report
from .dialogue import SubwordVocab
from .errors import ParseError, ScribekitError


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out_path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=out_path.parent or Path("."), prefix=out_path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _tokens_arg(value: str):
    if value == "whitespace":
        return "whitespace", None
    if value.startswith("subword:"):
        path = value[len("subword:") :]
        if not path:
            raise argparse.ArgumentTypeError("subword mode needs a vocabulary: subword:<vocabfile>")
        return "subword-file", path
    raise argparse.ArgumentTypeError(
        f"invalid --tokens value {value!r}; expected 'whitespace' or 'subword:<vocabfile>'"
    )


def _load_tokenizer(args) -> tuple[str, SubwordVocab | None]:
    mode, vocab_path = args.tokens
    vocab = SubwordVocab.from_file(vocab_path) if vocab_path else None
    return mode, vocab


def _read_text_jsonl(path) -> dict[str, str]:
    """Score-input JSON-lines: one {"id": ..., "text": ...} object per line."""
    texts: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: malformed JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise ParseError(f'{path}: expected {{"id", "text"}} object', line=lineno)
            if obj["id"] in texts:
                raise ParseError(f"{path}: duplicate id {obj['id']!r}", line=lineno)
            texts[obj["id"]] = obj["text"]
    return texts


def _cmd_ingest(args) -> int:
    loaded = corpus.load_corpus(args.corpus, manifest=args.manifest)
    pairs = loaded.pairs
    if args.split:
        pairs = tuple(p for p in pairs if p.split == args.split)
    lines = [
        json.dumps(
            {"id": p.encounter_id, "split": p.split, "dialogue": p.raw_dialogue, "note": p.raw_note},
            ensure_ascii=False,
        )
        for p in pairs
    ]
    _write_output("".join(line + "\n" for line in lines), args.out)
    print(f"ingested {len(pairs)} encounter pair(s) from {args.corpus}", file=sys.stderr)
    return 0


def _cmd_stats(args) -> int:
    mode, vocab = _load_tokenizer(args)
    loaded = corpus.load_corpus(args.corpus, manifest=args.manifest)
    stats = corpus.corpus_stats(loaded, tokenizer_mode=mode, vocab=vocab)
    if args.split:
        stats = [s for s in stats if s.split == args.split]
    _write_output(report.render_stats_table(stats, format=args.format), args.out)
    return 0


def _cmd_validate(args) -> int:
    loaded = corpus.load_corpus(args.corpus, manifest=args.manifest)
    result = corpus.validate_corpus(loaded)
    _write_output(json.dumps(result.as_dict(), ensure_ascii=False, indent=2) + "\n", args.out)
    if not result.is_clean:
        print("corpus has validation problems", file=sys.stderr)
        return 1
    return 0


def _cmd_build_instruct(args) -> int:
    loaded = corpus.load_corpus(args.corpus, manifest=args.manifest)
    pairs = loaded.pairs
    if args.split:
        pairs = tuple(p for p in pairs if p.split == args.split)
    template = instruct.InstructionTemplate()
    if args.template:
        template = instruct.InstructionTemplate(body=Path(args.template).read_text(encoding="utf-8"))
    records = [instruct.build_instruction_record(p, template) for p in pairs]
    payload = "".join(
        json.dumps(
            {"instruction": r.instruction, "input": r.input, "output": r.output, "id": r.encounter_id},
            ensure_ascii=False,
        )
        + "\n"
        for r in records
    )
    _write_output(payload, args.out)
    print(f"wrote {len(records)} instruction record(s)", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    candidates = _read_text_jsonl(args.candidates)
    references = _read_text_jsonl(args.references)
    if args.metric_config:
        config = metrics.MetricConfig.from_json(args.metric_config)
    else:
        config = metrics.MetricConfig()
    overrides = {}
    if args.metrics:
        overrides["metrics"] = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    if args.stemming:
        overrides["stemming"] = True
    if args.stopwords:
        overrides["stopwords"] = True
    if args.idf:
        overrides["idf"] = True
    if overrides:
        config = metrics.MetricConfig(
            metrics=overrides.get("metrics", config.metrics),
            stemming=overrides.get("stemming", config.stemming),
            stopwords=overrides.get("stopwords", config.stopwords),
            idf=overrides.get("idf", config.idf),
        )
    embeddings = None
    encoder_id = None
    if args.embeddings:
        header, records = metrics.read_emb_jsonl(args.embeddings)
        embeddings = metrics.pair_embeddings(records)
        encoder_id = header.get("encoder")
    result = metrics.score_corpus(
        candidates,
        references,
        config=config,
        embeddings=embeddings,
        jobs=args.jobs,
        system_name=args.system,
        encoder_id=encoder_id,
    )
    _write_output(json.dumps(result.as_dict(), ensure_ascii=False, indent=2) + "\n", args.out)
    return 0


def _load_leaderboard_input(path) -> list:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, list):
        return payload
    if isinstance(payload, dict) and "corpus_mean" in payload:
        return [metrics.ScoreReport.from_dict(payload)]
    raise ParseError(f"{path}: expected a ScoreReport object or a JSON array of rows")


def _cmd_leaderboard(args) -> int:
    rows: list = []
    for path in args.inputs:
        rows.extend(_load_leaderboard_input(path))
    _write_output(report.render_leaderboard(rows, format=args.format, sort_key=args.sort), args.out)
    return 0


def _cmd_lora_demo(args) -> int:
    rng = np.random.default_rng(args.seed)
    w_base = rng.standard_normal((args.d, args.k))
    if args.target == "zero":
        w_target = w_base.copy()
    elif args.target == "rank1":
        w_target = w_base + np.outer(rng.standard_normal(args.d), rng.standard_normal(args.k))
    else:
        w_target = w_base + rng.standard_normal((args.d, args.k))
    config = adapters.TrainConfig(
        rank=args.rank, alpha=args.alpha, steps=args.steps, learning_rate=args.lr, seed=args.seed
    )
    trace = adapters.train_lora_toy(w_base, w_target, config)
    stats = adapters.lora_param_stats(args.d, args.k, args.rank)
    payload = {
        "config": {
            "d": args.d,
            "k": args.k,
            "rank": config.rank,
            "alpha": config.alpha,
            "steps": config.steps,
            "learning_rate": config.learning_rate,
            "seed": config.seed,
            "target": args.target,
        },
        "param_stats": stats,
        "first_loss": trace.losses[0],
        "final_loss": trace.losses[-1],
        "losses": list(trace.losses),
    }
    _write_output(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", args.out)
    return 0


def _cmd_quant_demo(args) -> int:
    if args.input:
        values = []
        with open(args.input, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    values.append(float(line))
                except ValueError as exc:
                    raise ParseError(f"{args.input}: not a number: {line!r}", line=lineno) from exc
        values = np.asarray(values, dtype=np.float64)
    else:
        values = np.random.default_rng(args.seed).standard_normal(args.count)
    q = adapters.quantize_blockwise(values, args.block_size, args.scheme)
    restored = adapters.dequantize(q)
    err = restored - values
    payload = {
        "scheme": args.scheme,
        "block_size": args.block_size,
        "mse": float(np.mean(err * err)),
        "max_abs_error": float(np.max(np.abs(err))),
    }
    _write_output(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", args.out)
    return 0


def _add_corpus_args(parser):
    parser.add_argument("--corpus", required=True, help="corpus root directory")
    parser.add_argument("--manifest", help="optional JSON manifest of {id, split} overrides")
    parser.add_argument("--out", help="write output to this file (atomic) instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scribekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus directory and emit pair JSONL")
    _add_corpus_args(p)
    p.add_argument("--split", choices=corpus.SPLITS, help="keep only this split")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="per-split corpus statistics table")
    _add_corpus_args(p)
    p.add_argument("--split", choices=corpus.SPLITS, help="keep only this split")
    p.add_argument("--tokens", type=_tokens_arg, default=("whitespace", None),
                   help="whitespace | subword:<vocabfile>")
    p.add_argument("--format", default="markdown", choices=("md", "markdown", "csv", "json"))
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("validate", help="report duplicate ids, empty texts, unsectioned notes")
    _add_corpus_args(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("build-instruct", help="build instruction-tuning records (JSONL)")
    _add_corpus_args(p)
    p.add_argument("--split", choices=corpus.SPLITS, help="keep only this split")
    p.add_argument("--template", help="file with a custom instruction template body")
    p.set_defaults(func=_cmd_build_instruct)

    p = sub.add_parser("score", help="score candidate notes against references")
    p.add_argument("--candidates", required=True, help='JSONL of {"id", "text"}')
    p.add_argument("--references", required=True, help='JSONL of {"id", "text"}')
    p.add_argument("--metrics", help="comma list from: rouge1,rouge2,rougeLsum,bertscore")
    p.add_argument("--metric-config", help="MetricConfig JSON file")
    p.add_argument("--embeddings", help="EMB-JSONL file (required for bertscore)")
    p.add_argument("--stemming", action="store_true")
    p.add_argument("--stopwords", action="store_true")
    p.add_argument("--idf", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="scoring parallelism (output independent of N)")
    p.add_argument("--system", default="candidate", help="system name recorded in the report")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("leaderboard", help="render a sorted leaderboard from reports/row files")
    p.add_argument("inputs", nargs="+", help="ScoreReport JSON files or JSON arrays of rows")
    p.add_argument("--sort", default="rouge1", help="column to sort by (descending)")
    p.add_argument("--format", default="markdown", choices=("md", "markdown", "csv", "json"))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_leaderboard)

    p = sub.add_parser("lora-demo", help="toy low-rank adapter training run")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", default="rank1", choices=("zero", "rank1", "random"))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_lora_demo)

    p = sub.add_parser("quant-demo", help="blockwise 4-bit quantization error report")
    p.add_argument("--scheme", default="absmax4", choices=adapters.QUANT_SCHEMES)
    p.add_argument("--block-size", type=int, default=64)
    p.add_argument("--input", help="plain text file, one real value per line")
    p.add_argument("--count", type=int, help="draw this many seeded standard-normal samples instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_quant_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "quant-demo" and args.input is None and args.count is None:
        parser.error("quant-demo needs --input FILE or --count N (with --seed)")
    try:
        return args.func(args)
    except (ScribekitError, ValueError, OSError) as exc:
        print(f"scribekit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
