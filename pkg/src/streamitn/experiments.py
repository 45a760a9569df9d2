"""Directional ablation of masking regimes on synthetic data.

Four regimes are trained on the same corpus and scored on the same test set:

    NS  full attention at train and test time
    S4  dynamic chunk + right-context mask, streamed with r in {1, 2}
    S2  chunk mask without right context, streamed with r = 0
    S1  as S2 with a smaller encoder (stand-in for the missing pretraining)
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datagen import Example, GenConfig, generate, split
from .encoder import ModelConfig
from .metrics import EvalReport, Interval, bootstrap_diff, overall_f1
from .tokenizer import Vocab, build_vocab
from .trainer import EvalMode, TrainConfig, TrainResult, evaluate, train

log = logging.getLogger(__name__)

REGIMES = ("NS", "S4", "S2", "S1")
# (better, worse, strict): the first model's F1 must beat the second's
ORDERING = (("S4", "S2", True), ("S2", "S1", True), ("NS", "S4", False))


@dataclass(frozen=True)
class AblationConfig:
    train_sentences: int = 5000
    val_sentences: int = 300
    test_sentences: int = 2000
    data_seed: int = 1
    merges: int = 150
    layers: int = 2
    model_dim: int = 64
    ffn_dim: int = 128
    heads: int = 4
    small_layers: int = 1
    small_dim: int = 32
    epochs: int = 20
    lr: float = 1e-3
    eval_chunks: tuple[int, int] = (3, 5)
    eval_runs: int = 5
    ci_iterations: int = 10_000
    seed: int = 0

    def model(self, regime: str, vocab_size: int) -> ModelConfig:
        if regime == "S1":
            return ModelConfig(vocab_size, layers=self.small_layers, heads=2, model_dim=self.small_dim,
                               ffn_dim=2 * self.small_dim)
        return ModelConfig(vocab_size, layers=self.layers, heads=self.heads, model_dim=self.model_dim,
                           ffn_dim=self.ffn_dim)

    def training(self, regime: str) -> TrainConfig:
        mask = {"NS": "full", "S4": "dynamic"}.get(regime, "chunk")
        return TrainConfig(lr=self.lr, max_epochs=self.epochs, mask=mask, seed=self.seed)

    def eval_mode(self, regime: str) -> EvalMode:
        if regime == "NS":
            return EvalMode("full")
        rc = (1, 2) if regime == "S4" else (0, 0)
        return EvalMode("streaming", self.eval_chunks, rc, 16, runs=self.eval_runs, seed=self.seed)


@dataclass
class Dataset:
    train: list[Example]
    val: list[Example]
    test: list[Example]
    vocab: Vocab


def make_dataset(cfg: AblationConfig) -> Dataset:
    total = cfg.train_sentences + cfg.val_sentences + cfg.test_sentences
    corpus = generate(GenConfig(sentences=total, seed=cfg.data_seed))
    fr = (cfg.train_sentences / total, cfg.val_sentences / total, cfg.test_sentences / total)
    tr, va, te = split(corpus, cfg.data_seed, fr)
    return Dataset(tr, va, te, build_vocab([e.spoken for e in tr], cfg.merges))


@dataclass
class RegimeResult:
    regime: str
    result: TrainResult
    report: EvalReport
    seconds: float


@dataclass
class Gap:
    better: str
    worse: str
    strict: bool
    diff: Interval

    @property
    def holds(self) -> bool:
        ok = self.diff.mean > 0 if self.strict else self.diff.mean >= 0
        return ok and self.diff.mean > self.diff.half_width

    def line(self) -> str:
        op = ">" if self.strict else ">="
        return (f"F1({self.better}) {op} F1({self.worse}): gap {self.diff.mean:+.4f} "
                f"CI [{self.diff.lower:+.4f}, {self.diff.upper:+.4f}] half-width {self.diff.half_width:.4f}")


@dataclass
class AblationOutcome:
    config: AblationConfig
    regimes: dict[str, RegimeResult]
    gaps: list[Gap] = field(default_factory=list)

    def table(self) -> str:
        from .metrics import TABLE_HEADER
        rows = [TABLE_HEADER] + [r.report.row(name) for name, r in self.regimes.items()]
        return "\n".join(rows + [g.line() for g in self.gaps])

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "regimes": {k: {"report": r.report.to_dict(), "best_epoch": r.result.best_epoch,
                            "seconds": r.seconds} for k, r in self.regimes.items()},
            "gaps": [{"better": g.better, "worse": g.worse, "mean": g.diff.mean, "lower": g.diff.lower,
                      "upper": g.diff.upper, "holds": g.holds} for g in self.gaps],
        }


def run_regime(regime: str, cfg: AblationConfig, data: Dataset, log_dir: Path | None = None) -> RegimeResult:
    t0 = time.perf_counter()
    tc = cfg.training(regime)
    res = train(tc, cfg.model(regime, len(data.vocab)), data.train, data.val, data.vocab,
                log_path=log_dir / f"{regime}.jsonl" if log_dir else None)
    report = evaluate(res.params, data.vocab, data.test, cfg.eval_mode(regime))
    log.info("%s done in %.0fs: best epoch %d, F1 %.4f", regime, time.perf_counter() - t0,
             res.best_epoch, report.overall.f1)
    return RegimeResult(regime, res, report, time.perf_counter() - t0)


def compare(outcome: AblationOutcome) -> list[Gap]:
    cfg = outcome.config
    gaps = []
    for better, worse, strict in ORDERING:
        diff = bootstrap_diff(outcome.regimes[better].report.sentence_counts,
                              outcome.regimes[worse].report.sentence_counts,
                              overall_f1, cfg.ci_iterations, seed=cfg.seed)
        gaps.append(Gap(better, worse, strict, diff))
    outcome.gaps = gaps
    return gaps


def run_ablation(cfg: AblationConfig, data: Dataset | None = None, out_dir: str | Path | None = None,
                 regimes=REGIMES) -> AblationOutcome:
    data = data or make_dataset(cfg)
    out = Path(out_dir) if out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    outcome = AblationOutcome(cfg, {r: run_regime(r, cfg, data, out) for r in regimes})
    if set(REGIMES) <= set(regimes):
        compare(outcome)
    if out:
        (out / "ablation.json").write_text(json.dumps(outcome.to_dict(), indent=2))
        (out / "ablation.txt").write_text(outcome.table() + "\n")
    return outcome

