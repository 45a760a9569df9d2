"""Command-line entry point: gen-data, train, eval, stream, bench, ablation."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import datagen
from .encoder import ModelConfig, ModelParams, load_checkpoint, save_checkpoint
from .inference import Tagger
from .metrics import TABLE_HEADER
from .streaming import StreamConfig, StreamSession, flush_batch, push_batch, run_batch_mode
from .tokenizer import Vocab, build_vocab
from .trainer import EvalMode, TrainConfig, evaluate, train
from .wfst import FST_CATEGORIES, build_grammar

log = logging.getLogger("streamitn")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
SPLITS = ("train", "val", "test")


class CliError(RuntimeError):
    """Runtime failure reported with exit code 1."""


def int_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    return lo, hi


def int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in out):
        raise argparse.ArgumentTypeError("values must be >= 1")
    return out


# ---------------------------------------------------------------------------
# checkpoints carry their vocabulary

def save_model(path: str | Path, params: ModelParams, vocab: Vocab, extra: dict | None = None) -> None:
    save_checkpoint(path, params, {"vocab": list(vocab.pieces), **(extra or {})})


def load_model(path: str | Path) -> tuple[ModelParams, Vocab, dict]:
    if not Path(path).is_file():
        raise CliError(f"checkpoint not found: {path}")
    params, meta = load_checkpoint(path)
    if "vocab" not in meta:
        raise CliError(f"checkpoint has no vocabulary: {path}")
    return params, Vocab.from_pieces(meta["vocab"]), meta


def read_split(path: str | Path) -> list[datagen.Example]:
    if not Path(path).is_file():
        raise CliError(f"corpus not found: {path}")
    return datagen.read_corpus(path)


# ---------------------------------------------------------------------------
# commands

def cmd_gen_data(args) -> int:
    cfg = datagen.GenConfig(sentences=args.n, seed=args.seed)
    corpus = datagen.generate(cfg)
    parts = datagen.split(corpus, args.seed, tuple(args.fractions))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(SPLITS, parts):
        datagen.write_corpus(out / f"{name}.jsonl", part)
    print(json.dumps({name: len(part) for name, part in zip(SPLITS, parts)}))
    return EXIT_OK


def cmd_train(args) -> int:
    train_set = read_split(args.train)
    val_set = read_split(args.val) if args.val else []
    vocab = build_vocab([ex.spoken for ex in train_set], args.merges)
    tc = TrainConfig(lr=args.lr, lr_decay=args.lr_decay, beta1=args.beta1, beta2=args.beta2,
                     weight_decay=args.weight_decay, batch_size=args.batch_size, max_epochs=args.epochs,
                     patience=args.patience, grad_clip=args.grad_clip, mask=args.mask,
                     chunk_range=args.chunks, rc_range=args.rc, left_context=args.left,
                     max_offset=args.max_offset, seed=args.seed)
    mc = ModelConfig(len(vocab), layers=args.layers, heads=args.heads, model_dim=args.dim,
                     ffn_dim=args.ffn_dim, max_positions=args.max_positions, dropout_rate=args.dropout)
    res = train(tc, mc, train_set, val_set, vocab, log_path=args.log)
    save_model(args.out, res.params, vocab, {"train_config": asdict(tc), "best_epoch": res.best_epoch,
                                             "best_score": res.best_score})
    print(json.dumps({"checkpoint": str(args.out), "best_epoch": res.best_epoch, "best_score": res.best_score}))
    return EXIT_OK


def cmd_eval(args) -> int:
    params, vocab, _ = load_model(args.checkpoint)
    corpus = read_split(args.data)
    if args.stream_chunks:
        mode = EvalMode("streaming", args.stream_chunks, args.stream_rc, args.left, args.runs, args.seed)
    else:
        mode = EvalMode("full", seed=args.seed)
    report = evaluate(params, vocab, corpus, mode, ci_iterations=args.ci_iterations if args.ci else 0)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(TABLE_HEADER)
        print(report.row(args.name))
    return EXIT_OK


def cmd_stream(args) -> int:
    params, vocab, _ = load_model(args.checkpoint)
    tagger = Tagger(params, vocab)
    config = StreamConfig(left_context=args.left, right_context=args.rc)
    source = open(args.input, encoding="utf-8") if args.input else sys.stdin
    session = StreamSession(tagger, config)
    fragments, finalized = [], []
    try:
        for line in source:
            # one fragment per line; the newline itself is not a word boundary
            fragment = line.rstrip("\n")
            if not fragment:
                continue
            fragments.append(fragment)
            res = session.push(fragment)
            finalized.append(res.finalized)
            print(json.dumps(res.to_dict()), flush=True)
    finally:
        if args.input:
            source.close()
    if not fragments:
        return EXIT_OK
    res = session.flush()
    finalized.append(res.finalized)
    print(json.dumps(res.to_dict()), flush=True)
    if args.batch_compare:
        streamed = "".join(finalized)
        batch = run_batch_mode(tagger, "".join(fragments), config)
        if streamed != batch:
            raise CliError(f"streamed output differs from batch output:\n{streamed}\n{batch}")
        print(json.dumps({"batch_compare": "equal"}))
    return EXIT_OK


@dataclass
class BenchRow:
    chunk_words: int
    steps: int
    mean_ms: float
    p50_ms: float
    p95_ms: float
    max_ms: float
    rtf: float


@dataclass
class BenchReport:
    sessions: int
    cadence_s: float
    rows: list[BenchRow] = field(default_factory=list)

    def table(self) -> str:
        lines = [f"sessions={self.sessions} cadence={self.cadence_s * 1000:.0f}ms",
                 "chunk_words | mean_ms | p50_ms | p95_ms | max_ms | RTF"]
        for r in self.rows:
            lines.append(f"{r.chunk_words} | {r.mean_ms:.2f} | {r.p50_ms:.2f} | {r.p95_ms:.2f} | "
                         f"{r.max_ms:.2f} | {r.rtf:.3f}")
        return "\n".join(lines)


def bench_streams(sessions: int, words_needed: int, seed: int) -> list[list[str]]:
    """Independent synthetic word streams, one per session."""
    pool = datagen.generate(datagen.GenConfig(sentences=max(50, 4 * sessions), seed=seed))
    rng = np.random.default_rng(seed)
    streams = []
    for _ in range(sessions):
        words: list[str] = []
        while len(words) < words_needed:
            words += pool[int(rng.integers(len(pool)))].spoken
        streams.append(words[:words_needed])
    return streams


def run_bench(tagger: Tagger, sessions: int = 100, chunk_words: Sequence[int] = (3, 4, 5), steps: int = 10,
              cadence: float = 0.4, config: StreamConfig | None = None, seed: int = 0) -> BenchReport:
    """Time one batched push per simulated chunk interval across all sessions."""
    if sessions < 1 or steps < 1 or cadence <= 0:
        raise ValueError("sessions and steps must be >= 1 and cadence > 0")
    report = BenchReport(sessions, cadence)
    for category in FST_CATEGORIES:
        build_grammar(category)  # one-time compilation is not per-chunk latency
    for c in chunk_words:
        streams = bench_streams(sessions, c * steps, seed)
        pool = [StreamSession(tagger, config) for _ in range(sessions)]
        times = []
        for k in range(steps):
            frags = [" ".join(words[k * c:(k + 1) * c]) + " " for words in streams]
            t0 = time.perf_counter()
            push_batch(pool, frags)
            times.append(time.perf_counter() - t0)
        flush_batch(pool)
        ms = np.array(times) * 1000
        report.rows.append(BenchRow(c, steps, float(ms.mean()), float(np.percentile(ms, 50)),
                                    float(np.percentile(ms, 95)), float(ms.max()),
                                    float(np.mean(times) / cadence)))
    return report


def cmd_bench(args) -> int:
    params, vocab, _ = load_model(args.checkpoint)
    tagger = Tagger(params, vocab)
    report = run_bench(tagger, args.sessions, args.chunk_words, args.steps, args.cadence,
                       StreamConfig(left_context=args.left, right_context=args.rc), args.seed)
    if args.json:
        print(json.dumps(asdict(report), indent=2))
    else:
        print(report.table())
        worst = max(r.rtf for r in report.rows)
        print(f"real-time: {'yes' if worst < 1 else 'no'} (max RTF {worst:.3f})")
    return EXIT_OK


def cmd_ablation(args) -> int:
    from .experiments import AblationConfig, run_ablation
    cfg = AblationConfig(train_sentences=args.train_sentences, test_sentences=args.test_sentences,
                         epochs=args.epochs, lr=args.lr, ci_iterations=args.ci_iterations, seed=args.seed)
    outcome = run_ablation(cfg, out_dir=args.out)
    print(outcome.table())
    return EXIT_OK if all(g.holds for g in outcome.gaps) else EXIT_FAILURE


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamitn", description="Streaming inverse text normalization toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic corpus and split it")
    g.add_argument("--n", type=int, default=5000, help="number of distinct utterances")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--fractions", type=float, nargs=3, default=(0.8, 0.1, 0.1), metavar=("TRAIN", "VAL", "TEST"))
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen_data)

    d = TrainConfig()
    m = ModelConfig(vocab_size=1)
    t = sub.add_parser("train", help="train a tagger")
    t.add_argument("--train", required=True, help="training corpus (jsonl)")
    t.add_argument("--val", help="validation corpus (jsonl)")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="per-epoch JSON log path")
    t.add_argument("--merges", type=int, default=150)
    t.add_argument("--mask", choices=("full", "chunk", "dynamic"), default=d.mask)
    t.add_argument("--chunks", type=int_range, default=d.chunk_range)
    t.add_argument("--rc", type=int_range, default=d.rc_range)
    t.add_argument("--left", type=int, default=d.left_context)
    t.add_argument("--max-offset", type=int, default=d.max_offset)
    t.add_argument("--lr", type=float, default=d.lr)
    t.add_argument("--lr-decay", type=float, default=d.lr_decay)
    t.add_argument("--beta1", type=float, default=d.beta1)
    t.add_argument("--beta2", type=float, default=d.beta2)
    t.add_argument("--weight-decay", type=float, default=d.weight_decay)
    t.add_argument("--batch-size", type=int, default=d.batch_size)
    t.add_argument("--epochs", type=int, default=d.max_epochs)
    t.add_argument("--patience", type=int, default=d.patience)
    t.add_argument("--grad-clip", type=float, default=d.grad_clip)
    t.add_argument("--layers", type=int, default=m.layers)
    t.add_argument("--heads", type=int, default=m.heads)
    t.add_argument("--dim", type=int, default=m.model_dim)
    t.add_argument("--ffn-dim", type=int, default=m.ffn_dim)
    t.add_argument("--max-positions", type=int, default=m.max_positions)
    t.add_argument("--dropout", type=float, default=m.dropout_rate)
    t.add_argument("--seed", type=int, default=d.seed)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True, help="evaluation corpus (jsonl)")
    e.add_argument("--stream-chunks", type=int_range, help="simulate streaming with chunk sizes lo:hi")
    e.add_argument("--stream-rc", type=int_range, default=(0, 0))
    e.add_argument("--left", type=int, default=16)
    e.add_argument("--runs", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--ci", action="store_true", help="add 95%% bootstrap intervals")
    e.add_argument("--ci-iterations", type=int, default=10_000)
    e.add_argument("--name", default="", help="row label")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("stream", help="stream fragments (one per line) through a session")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--input", help="fragment file; default stdin")
    s.add_argument("--rc", type=int, default=1)
    s.add_argument("--left", type=int, default=16)
    s.add_argument("--batch-compare", action="store_true", help="check against single-push output")
    s.set_defaults(func=cmd_stream)

    b = sub.add_parser("bench", help="latency and real-time factor over concurrent sessions")
    b.add_argument("--checkpoint", required=True)
    b.add_argument("--sessions", type=int, default=100)
    b.add_argument("--chunk-words", type=int_list, default=[3, 4, 5])
    b.add_argument("--steps", type=int, default=10, help="chunks pushed per session")
    b.add_argument("--cadence", type=float, default=0.4, help="simulated seconds per chunk")
    b.add_argument("--rc", type=int, default=1)
    b.add_argument("--left", type=int, default=16)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("ablation", help="train and compare the NS/S4/S2/S1 regimes")
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--train-sentences", type=int, default=5000)
    a.add_argument("--test-sentences", type=int, default=2000)
    a.add_argument("--epochs", type=int, default=20)
    a.add_argument("--lr", type=float, default=1e-3)
    a.add_argument("--ci-iterations", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_ablation)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"streamitn: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
