"""Batched word-window tagging shared by evaluation and the streaming engine."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .encoder import ModelParams, forward, make_batch
from .tags import NC_TAGS, PUNCT_TAGS
from .tokenizer import SubwordSequence, Vocab, split_word


@dataclass(frozen=True)
class Window:
    """Words tagged together under an all-true mask; positions restart at 0."""

    words: tuple[str, ...]
    targets: tuple[int, ...]


class Tagger:
    """Model parameters plus vocabulary; tags word windows in batches.

    Inference runs in float32 by default, the precision checkpoints are stored in.
    """

    def __init__(self, params: ModelParams, vocab: Vocab, batch_size: int = 256, dtype=np.float32):
        self.params = params.astype(dtype)
        self.vocab = vocab
        self.batch_size = batch_size
        self._split = lru_cache(maxsize=65536)(self._split_word)

    def _split_word(self, word: str) -> tuple[int, ...]:
        return tuple(split_word(word.lower(), self.vocab))

    def sequence(self, words: Sequence[str]) -> SubwordSequence:
        ids, wids, first = [], [], []
        for w, word in enumerate(words):
            pieces = self._split(word)
            ids += pieces
            wids += [w] * len(pieces)
            first += [True] + [False] * (len(pieces) - 1)
        return SubwordSequence(ids, wids, first)

    def logits(self, windows: Sequence[Sequence[str]], masks: Sequence[np.ndarray | None] | None = None):
        """Return [(nc_logits, punct_logits, seq)] per window, in input order, eval mode."""
        seqs = [self.sequence(w) for w in windows]
        # batching windows of similar length keeps padding (and wasted matmul work) small
        order = sorted(range(len(seqs)), key=lambda i: len(seqs[i]))
        out: list = [None] * len(seqs)
        for start in range(0, len(order), self.batch_size):
            idx = order[start:start + self.batch_size]
            batch_seqs = [seqs[i] for i in idx]
            m = [None] * len(idx) if masks is None else [masks[i] for i in idx]
            nc, punct, _ = forward(self.params, make_batch(batch_seqs, m, pad_id=self.vocab.pad_id))
            for b, i in enumerate(idx):
                n = len(seqs[i])
                out[i] = (nc[b, :n], punct[b, :n], seqs[i])
        return out

    def tag(self, windows: Sequence[Window]) -> list[list[tuple[str, str]]]:
        """Raw argmax (nc, punct) tags for each window's target words; no IOB repair."""
        out = []
        for win, (nc, punct, seq) in zip(windows, self.logits([w.words for w in windows])):
            first = np.asarray(seq.first_positions())[list(win.targets)]
            nc_ids = nc[first].argmax(-1)
            p_ids = punct[first].argmax(-1)
            out.append([(NC_TAGS[int(a)], PUNCT_TAGS[int(b)]) for a, b in zip(nc_ids, p_ids)])
        return out
