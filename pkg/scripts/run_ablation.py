#!/usr/bin/env python3
"""Train the NS/S4/S2/S1 regimes on the seeded synthetic corpus and print the comparison table.

    python3 scripts/run_ablation.py --out results/ablation
"""

import argparse
import dataclasses
import logging
import sys
import time

from streamitn.experiments import AblationConfig, run_ablation


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="results/ablation")
    p.add_argument("--epochs", type=int, default=AblationConfig.epochs)
    p.add_argument("--train-sentences", type=int, default=AblationConfig.train_sentences)
    p.add_argument("--seed", type=int, default=AblationConfig.seed)
    p.add_argument("--regimes", nargs="+", default=["NS", "S4", "S2", "S1"])
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = dataclasses.replace(AblationConfig(), epochs=args.epochs, train_sentences=args.train_sentences,
                              seed=args.seed)
    t0 = time.perf_counter()
    outcome = run_ablation(cfg, out_dir=args.out, regimes=tuple(args.regimes))
    print(outcome.table())
    print(f"total {time.perf_counter() - t0:.0f}s; artifacts in {args.out}")
    return 0 if all(g.holds for g in outcome.gaps) else 1


if __name__ == "__main__":
    sys.exit(main())
