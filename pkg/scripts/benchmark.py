#!/usr/bin/env python3
"""Latency of batched streaming over many concurrent sessions.

Uses a checkpoint if given, otherwise a randomly initialised model of the
ablation size (latency does not depend on the weights).

    python3 scripts/benchmark.py [--checkpoint model.ckpt] [--sessions 100]
"""

import argparse

import numpy as np

from streamitn.cli import load_model, run_bench
from streamitn.datagen import GenConfig, generate
from streamitn.encoder import ModelConfig, init_params
from streamitn.inference import Tagger
from streamitn.streaming import StreamConfig
from streamitn.tokenizer import build_vocab


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--checkpoint")
    p.add_argument("--sessions", type=int, default=100)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--cadence", type=float, default=0.4)
    args = p.parse_args()
    if args.checkpoint:
        params, vocab, _ = load_model(args.checkpoint)
    else:
        vocab = build_vocab([e.spoken for e in generate(GenConfig(sentences=2000, seed=1))], 150)
        params = init_params(ModelConfig(len(vocab), layers=2, heads=4, model_dim=64, ffn_dim=128),
                             np.random.default_rng(0))
    for rc in (1, 2):
        report = run_bench(Tagger(params, vocab), args.sessions, (3, 4, 5), args.steps, args.cadence,
                           StreamConfig(right_context=rc))
        print(f"right context {rc}")
        print(report.table())


if __name__ == "__main__":
    main()
