"""Independent reference implementations used as test oracles."""

import math

import numpy as np

from streamitn.encoder import forward, loss
from streamitn.tokenizer import SubwordSequence


def seq_from_lengths(lengths, rng=None, vocab_size=20):
    wids = [w for w, n in enumerate(lengths) for _ in range(n)]
    first = [k == 0 or wids[k] != wids[k - 1] for k in range(len(wids))]
    if rng is None:
        ids = [4 + k % (vocab_size - 4) for k in range(len(wids))]
    else:
        ids = [int(i) for i in rng.integers(4, vocab_size, len(wids))]
    return SubwordSequence(ids, wids, first)


def ce_oracle(logits, labels, ignore=-100):
    """Straight-line mean cross-entropy over non-ignored positions."""
    total, count = 0.0, 0
    for row, lab in zip(np.reshape(logits, (-1, logits.shape[-1])), np.reshape(labels, -1)):
        if lab == ignore:
            continue
        m = max(row)
        log_z = m + math.log(sum(math.exp(x - m) for x in row))
        total += log_z - row[lab]
        count += 1
    return total / count


def numeric_gradients(params, batch, nc_labels, punct_labels, seed, step=1e-4):
    """Central differences of the training loss, replaying the same dropout draws."""

    def value():
        a, b, _ = forward(params, batch, train=True, rng=np.random.default_rng(seed))
        return loss(a, b, nc_labels, punct_labels)

    grads = {}
    for name, w in params.tensors.items():
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + step
            up = value()
            w[idx] = orig - step
            down = value()
            w[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads[name] = g
    return grads


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise |a - n| / max(|a| + |n|, floor); the floor handles entries that are exactly zero."""
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), floor)


def all_strings(alphabet_size, length):
    """Every string of the given length as rows of an int array, in lexicographic order."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int8)
    grids = np.meshgrid(*[np.arange(alphabet_size)] * length, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int8)


def edit_distance_table(refs, hyps):
    """Levenshtein distance for every (ref, hyp) pair, DP run over all pairs at once."""
    a, b = len(refs), len(hyps)
    n, m = refs.shape[1], hyps.shape[1]
    prev = [np.full((a, b), j, dtype=np.int16) for j in range(m + 1)]
    for i in range(1, n + 1):
        row = [np.full((a, b), i, dtype=np.int16)]
        for j in range(1, m + 1):
            differ = (refs[:, i - 1][:, None] != hyps[:, j - 1][None, :]).astype(np.int16)
            row.append(np.minimum(np.minimum(prev[j] + 1, row[j - 1] + 1), prev[j - 1] + differ))
        prev = row
    return prev[m]


def edit_distance(ref, hyp):
    """Plain recursive-free DP for one pair."""
    d = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        prev_diag, d[0] = d[0], i
        for j, h in enumerate(hyp, 1):
            cur = min(d[j] + 1, d[j - 1] + 1, prev_diag + (r != h))
            prev_diag, d[j] = d[j], cur
    return d[-1]


class RuleTagger:
    """Deterministic stand-in for a trained tagger; tags depend on the target and its window neighbours.

    Case for a fixed word list, Number for number words, a period after "now" or "today",
    a comma before "but" (which needs one word of right context).
    """

    CASE = {"vincom", "ocean", "park", "anna", "peter"}
    NUMBER = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "twenty",
              "point", "hundred", "thousand"}

    def __init__(self):
        self.calls = 0

    def _cls(self, word):
        if word in self.CASE:
            return "CASE"
        if word in self.NUMBER:
            return "NUMBER"
        return None

    def tag(self, windows):
        self.calls += 1
        out = []
        for win in windows:
            tags = []
            for t in win.targets:
                word = win.words[t]
                cls = self._cls(word)
                prev = self._cls(win.words[t - 1]) if t > 0 else None
                nc = "O" if cls is None else ("I-" if prev == cls else "B-") + cls
                if word == "point" and prev != "NUMBER":
                    nc = "O"
                nxt = win.words[t + 1] if t + 1 < len(win.words) else None
                punct = "COMMA" if nxt == "but" else ("PERIOD" if word in ("now", "today") else "O")
                tags.append((nc, punct))
            out.append(tags)
        return out
