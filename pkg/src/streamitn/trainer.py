"""AdamW training with per-sentence chunk-mask sampling, plus full and streaming evaluation."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import Example
from .encoder import ModelConfig, ModelParams, backward, forward, init_params, label_arrays, \
    loss, make_batch
from .inference import Tagger, Window
from .masking import ChunkSchedule, build_composite_mask, sample_schedule
from .metrics import PRF, EvalReport, add_confidence_intervals, build_report
from .streaming import postprocess
from .tags import repair_iob
from .tokenizer import Vocab, project_labels, tokenize

log = logging.getLogger(__name__)

MASK_MODES = ("full", "chunk", "dynamic")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-4
    lr_decay: float = 0.999875  # per epoch
    beta1: float = 0.8
    beta2: float = 0.99
    weight_decay: float = 0.01
    eps: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    grad_clip: float = 1.0
    mask: str = "dynamic"
    chunk_range: tuple[int, int] = (3, 7)
    rc_range: tuple[int, int] = (1, 2)
    left_context: int | None = 16
    max_offset: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.mask not in MASK_MODES:
            raise ValueError(f"mask must be one of {MASK_MODES}")
        if not (0 < self.lr and 0 < self.lr_decay <= 1 and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("invalid optimizer rates")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.lr_decay ** epoch

    def schedule(self, num_words: int, rng: np.random.Generator) -> ChunkSchedule:
        if self.mask == "full":
            return ChunkSchedule.full(num_words)
        rc = (0, 0) if self.mask == "chunk" else self.rc_range
        return sample_schedule(num_words, self.chunk_range, rc, self.left_context, rng)


class AdamW:
    """Adam moments with weight decay applied directly to the weights."""

    def __init__(self, params: ModelParams, beta1: float, beta2: float, weight_decay: float,
                 eps: float = 1e-8):
        self.params = params
        self.beta1, self.beta2, self.weight_decay, self.eps = beta1, beta2, weight_decay, eps
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for k, w in self.params.tensors.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            w *= 1 - lr * self.weight_decay
            w -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        self.params.version += 1


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


@dataclass
class Encoded:
    seqs: list
    labels: list


def encode(corpus: Sequence[Example], vocab: Vocab) -> Encoded:
    seqs = [tokenize(ex.spoken, vocab) for ex in corpus]
    labels = [project_labels(ex.nc_tags, ex.punct_tags, s) for ex, s in zip(corpus, seqs)]
    return Encoded(seqs, labels)


def _batches(data: Encoded, batch_size: int, rng: np.random.Generator, pool: int = 50) -> list[np.ndarray]:
    """Shuffled batches of similar length, to keep padding low."""
    order = rng.permutation(len(data.seqs))
    span = batch_size * pool
    out = []
    for start in range(0, len(order), span):
        group = sorted(order[start:start + span], key=lambda i: len(data.seqs[i]))
        out += [np.array(group[k:k + batch_size]) for k in range(0, len(group), batch_size)]
    return [out[i] for i in rng.permutation(len(out))]


def train_step(params: ModelParams, opt: AdamW, seqs, labels, config: TrainConfig,
               rng: np.random.Generator, lr: float) -> float:
    masks = [build_composite_mask(config.schedule(s.num_words, rng), s) for s in seqs]
    offsets = [int(rng.integers(0, config.max_offset + 1)) for _ in seqs]
    batch = make_batch(seqs, masks, offsets)
    nc_lab, p_lab = label_arrays(labels, batch.token_ids.shape[1])
    nc, punct, trace = forward(params, batch, train=True, rng=rng)
    value = loss(nc, punct, nc_lab, p_lab)
    if not math.isfinite(value):
        raise TrainingDiverged(f"loss became {value} at optimizer step {opt.t + 1}")
    grads = backward(params, trace, nc_lab, p_lab)
    clip_gradients(grads, config.grad_clip)
    opt.step(grads, lr)
    return value


@dataclass
class TrainResult:
    params: ModelParams
    best_epoch: int
    best_score: float
    history: list[dict] = field(default_factory=list)


def default_val_mode(config: TrainConfig) -> "EvalMode":
    if config.mask == "full":
        return EvalMode("full")
    rc = (0, 0) if config.mask == "chunk" else config.rc_range
    return EvalMode("streaming", config.chunk_range, rc, config.left_context or 16, runs=1, seed=config.seed)


def train(config: TrainConfig, model_config: ModelConfig, train_set: Sequence[Example],
          val_set: Sequence[Example], vocab: Vocab, log_path: str | Path | None = None,
          val_mode: "EvalMode | None" = None) -> TrainResult:
    """Train and return the parameters with the best validation span micro-F1."""
    if not train_set:
        raise ValueError("empty training corpus")
    rng = np.random.default_rng(config.seed)
    params = init_params(model_config, rng)
    opt = AdamW(params, config.beta1, config.beta2, config.weight_decay, config.eps)
    data = encode(train_set, vocab)
    val_mode = val_mode or default_val_mode(config)
    best = TrainResult(params.copy(), -1, -1.0)
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(config.max_epochs):
            lr = config.lr_at(epoch)
            losses = []
            for idx in _batches(data, config.batch_size, rng):
                losses.append(train_step(params, opt, [data.seqs[i] for i in idx],
                                         [data.labels[i] for i in idx], config, rng, lr))
            score = evaluate(params, vocab, val_set, val_mode).nc["micro"].f1 if val_set else -float(np.mean(losses))
            record = {"epoch": epoch, "train_loss": float(np.mean(losses)), "val_f1": score, "lr": lr}
            best.history.append(record)
            log.info("epoch %d loss %.4f val_f1 %.4f lr %.3g", epoch, record["train_loss"], score, lr)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
            if score > best.best_score:
                best.params, best.best_epoch, best.best_score = params.copy(), epoch, score
            elif epoch - best.best_epoch >= config.patience:
                break
    finally:
        if log_fh:
            log_fh.close()
    return best


# ---------------------------------------------------------------------------
# evaluation

@dataclass(frozen=True)
class EvalMode:
    kind: str = "full"  # "full" or "streaming"
    chunk_range: tuple[int, int] = (3, 5)
    rc_range: tuple[int, int] = (1, 2)
    left_context: int = 16
    runs: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("full", "streaming"):
            raise ValueError("eval kind must be 'full' or 'streaming'")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def chunk_windows(words: Sequence[str], schedule: ChunkSchedule, left_context: int) -> list[Window]:
    """One inference window per chunk: left context, the chunk, its right context."""
    wins = []
    for start, end, r in schedule.chunks():
        lo = max(0, start - left_context + 1)
        hi = min(len(words), end + r)
        wins.append(Window(tuple(words[lo:hi]), tuple(range(start - lo, end - lo))))
    return wins


def predict_corpus(tagger: Tagger, corpus: Sequence[Example], mode: EvalMode,
                   rng: np.random.Generator | None = None) -> list[tuple[list[str], list[str]]]:
    """Word-level (nc, punct) predictions per sentence under full or chunked inference."""
    if mode.kind == "full":
        windows = [Window(tuple(ex.spoken), tuple(range(len(ex.spoken)))) for ex in corpus]
        owners = list(range(len(corpus)))
    else:
        windows, owners = [], []
        for s, ex in enumerate(corpus):
            sched = sample_schedule(len(ex.spoken), mode.chunk_range, mode.rc_range, mode.left_context, rng)
            w = chunk_windows(ex.spoken, sched, mode.left_context)
            windows += w
            owners += [s] * len(w)
    per_sentence: list[list[tuple[str, str]]] = [[] for _ in corpus]
    for owner, tags in zip(owners, tagger.tag(windows)):
        per_sentence[owner] += tags
    return [(repair_iob([t[0] for t in tags]), [t[1] for t in tags]) for tags in per_sentence]


def _mean_prf(items: Sequence[PRF]) -> PRF:
    return PRF(*(float(np.mean([getattr(x, f) for x in items])) for f in ("precision", "recall", "f1")))


def mean_report(reports: Sequence[EvalReport]) -> EvalReport:
    """Average every metric over runs; per-sentence counts are averaged too, for bootstrap."""
    if len(reports) == 1:
        return reports[0]
    first = reports[0]
    return EvalReport(
        {k: _mean_prf([r.nc[k] for r in reports]) for k in first.nc},
        {k: _mean_prf([r.punct[k] for r in reports]) for k in first.punct},
        _mean_prf([r.overall for r in reports]),
        float(np.mean([r.i_wer for r in reports])),
        float(np.mean([r.ni_wer for r in reports])),
        np.mean([r.sentence_counts for r in reports], axis=0),
        np.mean([r.region_counts for r in reports], axis=0),
    )


def evaluate(params: ModelParams, vocab: Vocab, corpus: Sequence[Example], mode: EvalMode,
             ci_iterations: int = 0) -> EvalReport:
    """Tag and text metrics; streaming mode reports the mean of each metric over `mode.runs` runs."""
    if not corpus:
        raise ValueError("empty evaluation corpus")
    tagger = Tagger(params, vocab)
    runs = 1 if mode.kind == "full" else mode.runs
    rng = np.random.default_rng(mode.seed)
    reports = []
    for _ in range(runs):
        preds = predict_corpus(tagger, corpus, mode, rng)
        hyps = [postprocess(ex.spoken, nc, p).split(" ") for ex, (nc, p) in zip(corpus, preds)]
        reports.append(build_report([ex.nc_tags for ex in corpus], [p[0] for p in preds],
                                    [ex.punct_tags for ex in corpus], [p[1] for p in preds],
                                    [ex.written.split(" ") for ex in corpus], [ex.itn_flags for ex in corpus],
                                    hyps))
    report = mean_report(reports)
    if ci_iterations:
        add_confidence_intervals(report, ci_iterations, seed=mode.seed)
    return report


def config_dict(config) -> dict:
    return asdict(config)
