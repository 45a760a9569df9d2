"""Span P/R/F1, per-mark punctuation F1, WER with ITN region attribution, bootstrap CIs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tags import MARKS, NC_CLASSES, spans

PUNCT_MARKS = tuple(MARKS)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: float = 0.0
    fp: float = 0.0
    fn: float = 0.0


def prf(tp: float, fp: float, fn: float) -> PRF:
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f, tp, fp, fn)


def f1_from_counts(counts: np.ndarray) -> np.ndarray:
    """Vectorized F1 over a trailing (tp, fp, fn) axis."""
    tp, fp, fn = counts[..., 0], counts[..., 1], counts[..., 2]
    denom = 2 * tp + fp + fn
    return np.divide(2 * tp, denom, out=np.zeros_like(tp, dtype=float), where=denom > 0)


def span_counts(gold: Sequence[str], pred: Sequence[str]) -> dict[str, tuple[int, int, int]]:
    """Exact-match (tp, fp, fn) per class for one sentence."""
    if len(gold) != len(pred):
        raise ValueError(f"tag length mismatch: {len(gold)} vs {len(pred)}")
    g, p = set(spans(list(gold))), set(spans(list(pred)))
    out = {}
    for c in NC_CLASSES:
        gc = {s for s in g if s[2] == c}
        pc = {s for s in p if s[2] == c}
        out[c] = (len(gc & pc), len(pc - gc), len(gc - pc))
    return out


def punct_counts(gold: Sequence[str], pred: Sequence[str]) -> dict[str, tuple[int, int, int]]:
    if len(gold) != len(pred):
        raise ValueError(f"tag length mismatch: {len(gold)} vs {len(pred)}")
    out = {}
    for m in PUNCT_MARKS:
        tp = sum(1 for a, b in zip(gold, pred) if a == b == m)
        fp = sum(1 for a, b in zip(gold, pred) if b == m and a != m)
        fn = sum(1 for a, b in zip(gold, pred) if a == m and b != m)
        out[m] = (tp, fp, fn)
    return out


def span_prf(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> dict[str, PRF]:
    """Per-class and micro ("micro" key) exact-match span scores over a corpus."""
    if len(gold) != len(pred):
        raise ValueError("corpus length mismatch")
    totals = {c: np.zeros(3) for c in NC_CLASSES}
    for g, p in zip(gold, pred):
        for c, cnt in span_counts(g, p).items():
            totals[c] += cnt
    out = {c: prf(*totals[c]) for c in NC_CLASSES}
    out["micro"] = prf(*sum(totals.values()))
    return out


# ---------------------------------------------------------------------------
# word error rate

def align(reference: Sequence[str], hypothesis: Sequence[str]) -> list[tuple[str, int | None, int | None]]:
    """Unit-cost Levenshtein alignment as (op, ref_index, hyp_index) triples.

    On equal cost the backtrace prefers match, then sub, then del, then ins.
    """
    n, m = len(reference), len(hypothesis)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dp[i][0] = i
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row, prev, r = dp[i], dp[i - 1], reference[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (r != hypothesis[j - 1])
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dp[i][j]
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] and here == dp[i - 1][j - 1]:
            ops.append(("match", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and here == dp[i - 1][j - 1] + 1:
            ops.append(("sub", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and here == dp[i - 1][j] + 1:
            ops.append(("del", i - 1, None))
            i -= 1
        else:
            ops.append(("ins", None, j - 1))
            j -= 1
    ops.reverse()
    return ops


def wer(reference: Sequence[str], hypothesis: Sequence[str]):
    """(rate, alignment); rate = (S + I + D) / len(reference)."""
    ops = align(reference, hypothesis)
    errors = sum(1 for op in ops if op[0] != "match")
    if not reference:
        if hypothesis:
            raise ValueError("WER undefined for an empty reference")
        return 0.0, ops
    return errors / len(reference), ops


@dataclass(frozen=True)
class RegionErrors:
    itn_errors: int
    itn_ref: int
    other_errors: int
    other_ref: int

    @property
    def i_wer(self) -> float:
        return self.itn_errors / self.itn_ref if self.itn_ref else 0.0

    @property
    def ni_wer(self) -> float:
        return self.other_errors / self.other_ref if self.other_ref else 0.0


def itn_region_errors(reference: Sequence[str], itn_flags: Sequence[bool],
                      hypothesis: Sequence[str]) -> RegionErrors:
    """Attribute each alignment error to the ITN or non-ITN region of the reference.

    Insertions belong to the nearest preceding reference word; before any
    reference word they count as non-ITN.
    """
    if len(reference) != len(itn_flags):
        raise ValueError("one ITN flag per reference word required")
    if not reference and hypothesis:
        raise ValueError("WER undefined for an empty reference")
    itn_err = other_err = 0
    last_ref = None
    for op, ri, _ in align(reference, hypothesis):
        if ri is not None:
            last_ref = ri
        if op == "match":
            continue
        region = itn_flags[ri] if ri is not None else (itn_flags[last_ref] if last_ref is not None else False)
        if region:
            itn_err += 1
        else:
            other_err += 1
    n_itn = sum(1 for f in itn_flags if f)
    return RegionErrors(itn_err, n_itn, other_err, len(reference) - n_itn)


def itn_wer(reference: Sequence[str], itn_flags: Sequence[bool],
            hypothesis: Sequence[str]) -> tuple[float, float]:
    """(I-WER, NI-WER) for one sentence."""
    r = itn_region_errors(reference, itn_flags, hypothesis)
    return r.i_wer, r.ni_wer


# ---------------------------------------------------------------------------
# bootstrap

@dataclass(frozen=True)
class Interval:
    mean: float
    lower: float
    upper: float

    @property
    def half_width(self) -> float:
        return (self.upper - self.lower) / 2

    def __str__(self) -> str:
        return f"{self.mean:.4f}[{self.lower:.4f},{self.upper:.4f}]"


def _resampled_sums(stats: np.ndarray, iterations: int, rng: np.random.Generator, block: int = 500):
    n = stats.shape[0]
    for start in range(0, iterations, block):
        size = min(block, iterations - start)
        idx = rng.integers(0, n, size=(size, n))
        # occurrence counts per sentence, then a weighted sum of the per-sentence stats
        weights = np.zeros((size, n))
        np.add.at(weights, (np.repeat(np.arange(size), n), idx.ravel()), 1.0)
        yield np.tensordot(weights, stats, axes=(1, 0))


def bootstrap_ci(stats: np.ndarray, metric: Callable[[np.ndarray], np.ndarray],
                 iterations: int = 10_000, confidence: float = 0.95, seed: int = 0) -> Interval:
    """Percentile bootstrap over sentences.

    `stats` holds additive per-sentence statistics (n_sentences, ...); `metric`
    maps summed statistics (with any leading batch axes) to a scalar per row.
    """
    stats = np.asarray(stats, dtype=float)
    if stats.shape[0] < 1:
        raise ValueError("need at least one sentence")
    rng = np.random.default_rng(seed)
    point = float(metric(stats.sum(0)))
    values = np.concatenate([np.atleast_1d(metric(s)) for s in _resampled_sums(stats, iterations, rng)])
    alpha = (1 - confidence) / 2
    lo, hi = np.quantile(values, [alpha, 1 - alpha])
    return Interval(point, float(lo), float(hi))


def bootstrap_diff(stats_a: np.ndarray, stats_b: np.ndarray, metric: Callable[[np.ndarray], np.ndarray],
                   iterations: int = 10_000, confidence: float = 0.95, seed: int = 0) -> Interval:
    """Paired percentile bootstrap of metric(a) - metric(b) over the same resampled sentences."""
    stats_a, stats_b = np.asarray(stats_a, float), np.asarray(stats_b, float)
    if stats_a.shape != stats_b.shape:
        raise ValueError("paired statistics must have the same shape")
    k = stats_a[0].size
    joint = np.concatenate([stats_a.reshape(len(stats_a), -1), stats_b.reshape(len(stats_b), -1)], axis=1)
    shape = stats_a.shape[1:]

    def diff(s):
        a = s[..., :k].reshape(s.shape[:-1] + shape)
        b = s[..., k:].reshape(s.shape[:-1] + shape)
        return metric(a) - metric(b)

    return bootstrap_ci(joint, diff, iterations, confidence, seed)


@dataclass
class EvalReport:
    nc: dict[str, PRF]
    punct: dict[str, PRF]
    overall: PRF
    i_wer: float
    ni_wer: float
    # per-sentence (n, groups, 3) counts: NC classes then marks; used for bootstrap
    sentence_counts: np.ndarray = field(repr=False, default=None)
    region_counts: np.ndarray = field(repr=False, default=None)
    ci: dict[str, Interval] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def d(x: PRF):
            return {"precision": x.precision, "recall": x.recall, "f1": x.f1}
        return {
            "number_case": {k: d(v) for k, v in self.nc.items()},
            "punctuation": {k: d(v) for k, v in self.punct.items()},
            "overall": d(self.overall),
            "i_wer": self.i_wer,
            "ni_wer": self.ni_wer,
            "ci": {k: {"mean": v.mean, "lower": v.lower, "upper": v.upper} for k, v in self.ci.items()},
        }

    def row(self, name: str = "") -> str:
        """Precision / Recall / F1 / I_WER / NI_WER; WERs scaled by 100."""
        def fmt(key, value, scale=1.0, digits=2):
            if key in self.ci:
                c = self.ci[key]
                return f"{c.mean * scale:.{digits}f}[{c.lower * scale:.{digits}f},{c.upper * scale:.{digits}f}]"
            return f"{value * scale:.{digits}f}"
        cells = [fmt("precision", self.overall.precision), fmt("recall", self.overall.recall),
                 fmt("f1", self.overall.f1), fmt("i_wer", self.i_wer, 100), fmt("ni_wer", self.ni_wer, 100)]
        return " | ".join([name] + cells) if name else " | ".join(cells)


TABLE_HEADER = "Model | Precision | Recall | F1 | I_WER | NI_WER"


def build_report(gold_nc, pred_nc, gold_punct, pred_punct, references, flags, hypotheses) -> EvalReport:
    """Aggregate tag and text metrics over a corpus; text arguments are word lists."""
    groups = NC_CLASSES + PUNCT_MARKS
    counts = np.zeros((len(gold_nc), len(groups), 3))
    regions = np.zeros((len(gold_nc), 4))
    for s, (gn, pn, gp, pp, ref, fl, hyp) in enumerate(
            zip(gold_nc, pred_nc, gold_punct, pred_punct, references, flags, hypotheses)):
        sc = span_counts(gn, pn)
        pc = punct_counts(gp, pp)
        counts[s] = [sc[c] for c in NC_CLASSES] + [pc[m] for m in PUNCT_MARKS]
        r = itn_region_errors(ref, fl, hyp)
        regions[s] = (r.itn_errors, r.itn_ref, r.other_errors, r.other_ref)
    return report_from_counts(counts, regions)


def report_from_counts(counts: np.ndarray, regions: np.ndarray) -> EvalReport:
    total = counts.sum(0)
    nc = {c: prf(*total[i]) for i, c in enumerate(NC_CLASSES)}
    nc["micro"] = prf(*total[:len(NC_CLASSES)].sum(0))
    punct = {m: prf(*total[len(NC_CLASSES) + i]) for i, m in enumerate(PUNCT_MARKS)}
    punct["micro"] = prf(*total[len(NC_CLASSES):].sum(0))
    r = regions.sum(0)
    return EvalReport(nc, punct, prf(*total.sum(0)),
                      r[0] / r[1] if r[1] else 0.0, r[2] / r[3] if r[3] else 0.0, counts, regions)


def overall_f1(counts: np.ndarray) -> np.ndarray:
    """Pooled micro F1 over spans and marks, from (..., groups, 3) summed counts."""
    return f1_from_counts(counts.sum(-2))


def nc_micro_f1(counts: np.ndarray) -> np.ndarray:
    return f1_from_counts(counts[..., :len(NC_CLASSES), :].sum(-2))


def precision_metric(counts: np.ndarray) -> np.ndarray:
    c = counts.sum(-2)
    d = c[..., 0] + c[..., 1]
    return np.divide(c[..., 0], d, out=np.zeros_like(d), where=d > 0)


def recall_metric(counts: np.ndarray) -> np.ndarray:
    c = counts.sum(-2)
    d = c[..., 0] + c[..., 2]
    return np.divide(c[..., 0], d, out=np.zeros_like(d), where=d > 0)


def i_wer_metric(regions: np.ndarray) -> np.ndarray:
    return np.divide(regions[..., 0], regions[..., 1], out=np.zeros_like(regions[..., 0]),
                     where=regions[..., 1] > 0)


def ni_wer_metric(regions: np.ndarray) -> np.ndarray:
    return np.divide(regions[..., 2], regions[..., 3], out=np.zeros_like(regions[..., 2]),
                     where=regions[..., 3] > 0)


def add_confidence_intervals(report: EvalReport, iterations: int = 10_000, seed: int = 0) -> EvalReport:
    c, r = report.sentence_counts, report.region_counts
    report.ci = {
        "precision": bootstrap_ci(c, precision_metric, iterations, seed=seed),
        "recall": bootstrap_ci(c, recall_metric, iterations, seed=seed),
        "f1": bootstrap_ci(c, overall_f1, iterations, seed=seed),
        "i_wer": bootstrap_ci(r, i_wer_metric, iterations, seed=seed),
        "ni_wer": bootstrap_ci(r, ni_wer_metric, iterations, seed=seed),
    }
    return report
